#include "oodhcn/toy.hpp"

#include <algorithm>
#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "oodhcn/error.hpp"
#include "oodhcn/rng.hpp"

namespace oodhcn {

namespace {

constexpr std::array<std::string_view, 9> kCuisines = {
    "italian", "chinese", "indian", "french", "thai", "spanish", "british", "korean",
    "north american"};
constexpr std::array<std::string_view, 5> kAreas = {"north", "south", "east", "west", "centre"};
constexpr std::array<std::string_view, 3> kPrices = {"cheap", "moderate", "expensive"};
constexpr std::array<std::string_view, 24> kNames = {
    "saffron_house", "golden_wok",    "la_tasca",     "bangkok_city", "curry_garden",
    "the_copper_pot", "pizza_express", "seoul_kitchen", "maison_blanc",  "the_oak_tree",
    "river_bar",      "lotus_court",   "casa_bonita",  "the_red_lion", "spice_route",
    "blue_dragon",    "olive_grove",   "hotel_du_vin", "the_eagle",    "tandoori_palace",
    "jade_garden",    "el_paso_grill", "the_mill",     "kimchi_house"};

struct Attribute {
  std::string_view slot;
  std::string_view label;  // as it appears in the system response
  std::array<std::string_view, 2> requests;
};

constexpr std::array<Attribute, 14> kAttributes = {{
    {"phone", "phone number", {"what is the phone number", "may i have the phone number"}},
    {"address", "address", {"what is the address", "can i get the address"}},
    {"postcode", "post code", {"what is the post code", "whats the postcode please"}},
    {"rating", "rating", {"how is it rated", "what rating does it have"}},
    {"hours", "opening hours", {"when is it open", "what are the opening hours"}},
    {"website", "website", {"do they have a website", "what is their website"}},
    {"email", "email", {"what is their email", "can i email them"}},
    {"parking", "parking", {"is there parking", "where can i park"}},
    {"menu", "menu", {"can i see the menu", "what is on the menu"}},
    {"capacity", "seating capacity", {"how many seats do they have", "how big is the place"}},
    {"chef", "head chef", {"who is the chef", "who cooks there"}},
    {"owner", "owner", {"who owns it", "who is the owner"}},
    {"delivery", "delivery service", {"do they deliver", "is delivery available"}},
    {"dresscode", "dress code", {"is there a dress code", "what should i wear"}},
}};

constexpr std::string_view kGreeting =
    "hello , welcome to the restaurant system . you can ask for restaurants by area , price "
    "range or food type . how may i help you ?";
constexpr std::string_view kAskFood = "what kind of food would you like ?";
constexpr std::string_view kAskArea = "what part of town do you have in mind ?";
constexpr std::string_view kAskPrice =
    "would you like something in the cheap , moderate , or expensive price range ?";
constexpr std::string_view kAnythingElse = "is there anything else i can help you with ?";
constexpr std::string_view kWelcome = "you are welcome";

// Foreign-domain utterance templates; {x} placeholders are filled from kFill.
constexpr std::array<std::string_view, 16> kOodTemplates = {
    "what is the weather like in {city} {day}",
    "will it rain in {city} {day}",
    "book a flight from {city} to {city2}",
    "i need a train ticket to {city} for {day}",
    "when does the next bus to {city} leave",
    "how do i get to the airport from {city}",
    "set an alarm for {time}",
    "remind me to call my mother at {time}",
    "play some {genre} music",
    "tell me a joke about {animal}",
    "how tall is mount everest",
    "what time is it in {city}",
    "turn off the lights in the {room}",
    "order a taxi to {city2} at {time}",
    "is my flight to {city} delayed",
    "show me pictures of {animal}",
};
constexpr std::array<std::string_view, 8> kCities = {
    "paris", "tokyo", "berlin", "london", "madrid", "boston", "oslo", "dublin"};
constexpr std::array<std::string_view, 5> kDays = {"today", "tomorrow", "on monday",
                                                   "this weekend", "on friday"};
constexpr std::array<std::string_view, 5> kTimes = {"seven am", "noon", "six thirty",
                                                    "nine pm", "midnight"};
constexpr std::array<std::string_view, 4> kGenres = {"jazz", "rock", "classical", "pop"};
constexpr std::array<std::string_view, 4> kAnimals = {"cats", "dogs", "penguins", "horses"};
constexpr std::array<std::string_view, 3> kRooms = {"kitchen", "bedroom", "garage"};

constexpr std::array<std::string_view, 12> kInterjections = {
    "oh sorry",      "sorry i meant", "oops",       "my mistake", "wait",   "never mind that",
    "uh",            "actually",      "ignore that", "no wait",   "i mean", "scratch that"};

template <std::size_t N>
std::string_view pick(Rng& rng, const std::array<std::string_view, N>& options) {
  return options[rng.uniform_index(N)];
}

std::string replace_all(std::string text, std::string_view key, std::string_view value) {
  for (std::size_t pos = text.find(key); pos != std::string::npos; pos = text.find(key, pos)) {
    text.replace(pos, key.size(), value);
    pos += value.size();
  }
  return text;
}

Turn make_turn(std::string_view user, std::string_view system) {
  Turn t;
  t.user_tokens = tokenize(user);
  t.system_utterance = std::string(system);
  return t;
}

struct Restaurant {
  std::string name;
  std::string cuisine;
  std::string area;
  std::string price;
};

std::string attribute_value(const Restaurant& r, const Attribute& a) {
  return r.name + "_" + std::string(a.slot);
}

std::string attribute_response(const Restaurant& r, const Attribute& a) {
  return "the " + std::string(a.label) + " of " + r.name + " is " + attribute_value(r, a);
}

std::string opening_request(Rng& rng, bool with_cuisine, bool with_area, bool with_price,
                            const Restaurant& goal) {
  constexpr std::array<std::string_view, 3> kLead = {"i want a", "i am looking for a",
                                                     "can you find me a"};
  std::string s(pick(rng, kLead));
  if (with_price) s += " " + goal.price;
  s += " restaurant";
  if (with_cuisine) s += " serving " + goal.cuisine + " food";
  if (with_area) s += " in the " + goal.area + " part of town";
  return s;
}

std::string slot_answer(Rng& rng, int slot, const Restaurant& goal) {
  switch (slot) {
    case 0: {
      constexpr std::array<std::string_view, 3> k = {"{v} food", "i would like {v}", "{v}"};
      return replace_all(std::string(pick(rng, k)), "{v}", goal.cuisine);
    }
    case 1: {
      constexpr std::array<std::string_view, 3> k = {"{v}", "in the {v}", "the {v} part of town"};
      return replace_all(std::string(pick(rng, k)), "{v}", goal.area);
    }
    default: {
      constexpr std::array<std::string_view, 3> k = {"{v}", "{v} price range",
                                                     "something {v} please"};
      return replace_all(std::string(pick(rng, k)), "{v}", goal.price);
    }
  }
}

Dialog make_dialog(Rng& rng, int n_attributes, int forced_attribute, int forced_slots) {
  Restaurant goal;
  goal.name = std::string(pick(rng, kNames));
  goal.cuisine = std::string(pick(rng, kCuisines));
  goal.area = std::string(pick(rng, kAreas));
  goal.price = std::string(pick(rng, kPrices));

  std::array<bool, 3> given{};
  for (auto& g : given) g = rng.bernoulli(0.5);
  if (forced_slots == 0) given = {false, false, false};
  if (forced_slots == 3) given = {true, true, true};

  Dialog d;
  d.turns.push_back(make_turn(kSilenceToken, kGreeting));
  std::string user = opening_request(rng, given[0], given[1], given[2], goal);
  constexpr std::array<std::string_view, 3> kAsk = {kAskFood, kAskArea, kAskPrice};
  for (int slot = 0; slot < 3; ++slot) {
    if (given[static_cast<std::size_t>(slot)]) continue;
    d.turns.push_back(make_turn(user, kAsk[static_cast<std::size_t>(slot)]));
    user = slot_answer(rng, slot, goal);
  }
  const std::string api =
      "api_call " + goal.cuisine + " " + goal.area + " " + goal.price;
  d.turns.push_back(make_turn(user, api));

  Turn offer = make_turn(kSilenceToken, goal.name + " is a nice restaurant in the " + goal.area +
                                           " of town serving " + goal.cuisine + " food");
  offer.kb_facts = {goal.name + " R_cuisine " + goal.cuisine,
                    goal.name + " R_location " + goal.area,
                    goal.name + " R_price " + goal.price};
  for (int a = 0; a < n_attributes; ++a) {
    const Attribute& attr = kAttributes[static_cast<std::size_t>(a)];
    offer.kb_facts.push_back(goal.name + " R_" + std::string(attr.slot) + " " +
                             attribute_value(goal, attr));
  }
  d.turns.push_back(std::move(offer));

  const int requests = 1 + static_cast<int>(rng.uniform_index(3));
  std::vector<int> asked;
  for (int k = 0; k < requests; ++k) {
    int a = 0;
    if (k == 0 && forced_attribute >= 0) {
      a = forced_attribute;
    } else {
      do {
        a = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(n_attributes)));
      } while (std::find(asked.begin(), asked.end(), a) != asked.end() &&
               asked.size() < static_cast<std::size_t>(n_attributes));
    }
    asked.push_back(a);
    const Attribute& attr = kAttributes[static_cast<std::size_t>(a)];
    d.turns.push_back(make_turn(attr.requests[rng.uniform_index(2)], attribute_response(goal, attr)));
  }
  constexpr std::array<std::string_view, 2> kThanks = {"thank you", "thanks"};
  constexpr std::array<std::string_view, 2> kBye = {"no thank you goodbye", "no that is all bye"};
  d.turns.push_back(make_turn(pick(rng, kThanks), kAnythingElse));
  d.turns.push_back(make_turn(pick(rng, kBye), kWelcome));
  return d;
}

Lexicon toy_lexicon(int n_attributes) {
  Lexicon lex;
  for (auto v : kCuisines) lex.add("cuisine", v);
  for (auto v : kAreas) lex.add("area", v);
  for (auto v : kPrices) lex.add("pricerange", v);
  for (auto n : kNames) {
    lex.add("name", n);
    Restaurant r{std::string(n), {}, {}, {}};
    for (int a = 0; a < n_attributes; ++a) {
      const Attribute& attr = kAttributes[static_cast<std::size_t>(a)];
      lex.add(attr.slot, attribute_value(r, attr));
    }
  }
  return lex;
}

Corpus ood_dialogs(Rng& rng) {
  Corpus out;
  int id = 1;
  for (auto tmpl : kOodTemplates) {
    for (int k = 0; k < 6; ++k) {
      std::string s(tmpl);
      s = replace_all(s, "{city2}", pick(rng, kCities));
      s = replace_all(s, "{city}", pick(rng, kCities));
      s = replace_all(s, "{day}", pick(rng, kDays));
      s = replace_all(s, "{time}", pick(rng, kTimes));
      s = replace_all(s, "{genre}", pick(rng, kGenres));
      s = replace_all(s, "{animal}", pick(rng, kAnimals));
      s = replace_all(s, "{room}", pick(rng, kRooms));
      Dialog d;
      d.id = id++;
      d.turns.push_back(make_turn(s, "ok"));
      out.push_back(std::move(d));
    }
  }
  return out;
}

}  // namespace

int toy_max_actions() { return kToyBaseActions + static_cast<int>(kAttributes.size()); }

ToyDomain generate_toy_domain(std::uint64_t seed, int n_dialogs, int n_actions) {
  if (n_actions <= kToyBaseActions || n_actions > toy_max_actions()) {
    throw Error("toy n_actions must be in [" + std::to_string(kToyBaseActions + 1) + ", " +
                std::to_string(toy_max_actions()) + "]");
  }
  if (n_dialogs < 3 * n_actions) throw Error("toy n_dialogs must be at least 3 * n_actions");
  const int n_attributes = n_actions - kToyBaseActions;
  const int n_train = n_dialogs * 8 / 10;
  const int n_dev = n_dialogs / 10;

  ToyDomain out;
  Rng rng(derive_seed(seed, "toy"));
  for (int i = 0; i < n_dialogs; ++i) {
    Rng dialog_rng(derive_seed(rng.key(), static_cast<std::uint64_t>(i)));
    // The first training dialogs pin down every template at least once.
    const int forced_attribute = i < n_attributes ? i : -1;
    const int forced_slots = i == 0 ? 0 : (i == 1 ? 3 : -1);
    Dialog d = make_dialog(dialog_rng, n_attributes, forced_attribute, forced_slots);
    Corpus& split = i < n_train ? out.train : (i < n_train + n_dev ? out.dev : out.test);
    d.id = static_cast<int>(split.size()) + 1;
    split.push_back(std::move(d));
  }
  out.lexicon = toy_lexicon(n_attributes);
  Rng ood_rng(derive_seed(seed, "toy_ood"));
  out.ood_dialogs = ood_dialogs(ood_rng);
  for (auto s : kInterjections) out.segments.interjections.push_back(tokenize(s));
  return out;
}

}  // namespace oodhcn
