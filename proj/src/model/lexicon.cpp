#include "storyline/model/lexicon.hpp"

#include <algorithm>
#include <array>
#include <string>
#include <unordered_map>
#include <unordered_set>

namespace storyline::lexicon {

namespace {

constexpr std::string_view kStopwords[] = {
    "a", "an", "the", "this", "that", "these", "those", "some", "any", "each", "every", "all",
    "both", "another", "other", "such", "no", "not", "and", "or", "but", "nor", "so", "yet",
    "if", "then", "than", "as", "while", "because", "though", "although", "when", "where",
    "whose", "which", "who", "whom", "what", "there", "here", "of", "in", "on", "at", "to",
    "from", "by", "with", "without", "into", "onto", "over", "under", "above", "below",
    "behind", "beside", "besides", "between", "among", "through", "across", "along", "around",
    "near", "next", "up", "down", "out", "off", "about", "against", "toward", "towards",
    "upon", "within", "during", "before", "after", "for", "like", "per", "via", "i", "me",
    "my", "mine", "we", "us", "our", "you", "your", "he", "him", "his", "she", "her", "hers",
    "it", "its", "they", "them", "their", "theirs", "himself", "herself", "itself",
    "themselves", "one", "ones", "is", "are", "was", "were", "be", "been", "being", "am",
    "has", "have", "had", "having", "do", "does", "did", "doing", "will", "would", "can",
    "could", "may", "might", "must", "shall", "should", "very", "too", "also", "just",
    "only", "still", "even", "again", "front", "top", "side", "middle", "together",
    // verbs common in captions
    "driving", "drives", "drive", "drove", "sitting", "sits", "sit", "sat", "standing",
    "stands", "stand", "stood", "walking", "walks", "walk", "running", "runs", "run",
    "holding", "holds", "hold", "held", "wearing", "wears", "wear", "looking", "looks",
    "look", "taking", "takes", "take", "took", "playing", "plays", "play", "eating", "eats",
    "eat", "drinking", "drinks", "sipping", "sips", "sip", "talking", "talks", "talk",
    "smiling", "smiles", "smile", "riding", "rides", "ride", "capturing", "captures",
    "capture", "placed", "placing", "places", "lying", "lies", "laying", "using", "uses",
    "use", "watching", "watches", "reading", "reads", "writing", "writes", "cooking",
    "cooks", "dancing", "dances", "singing", "sings", "posing", "poses", "pose", "carrying",
    "carries", "carry", "pointing", "points", "waving", "waves", "jumping", "jumps",
    "flying", "flies", "swimming", "swims", "climbing", "climbs", "opening", "opens",
    "closing", "closes", "pushing", "pushes", "pulling", "pulls", "showing", "shows",
    "working", "works", "getting", "gets", "making", "makes", "giving", "gives", "seen",
    "shown", "filled", "covered", "made", "parked", "gets", "go", "goes", "going", "went",
    "come", "comes", "coming", "leaning", "leans", "resting", "rests", "kneeling",
    "hugging", "hugs", "kissing", "kisses", "laughing", "laughs", "crying", "cries",
    "staring", "stares", "facing", "faces", "sleeping", "sleeps", "typing", "types",
    "shopping", "preparing", "prepares", "cutting", "cuts", "firmly", "closely", "slowly",
    "quickly", "happily", "outside", "inside", "indoors", "outdoors", "while",
};

constexpr std::string_view kNouns[] = {
    // people
    "person", "man", "woman", "boy", "girl", "child", "kid", "baby", "toddler", "teenager",
    "lady", "gentleman", "guy", "people", "player", "driver", "worker", "chef", "cook",
    "doctor", "nurse", "teacher", "student", "soldier", "police", "officer", "farmer",
    "musician", "singer", "dancer", "athlete", "runner", "rider", "skier", "surfer",
    "skateboarder", "customer", "crowd", "couple", "family", "friend", "mother", "father",
    "daughter", "son", "brother", "sister", "grandmother", "grandfather", "bride", "groom",
    "actor", "actress", "host", "reporter", "operator", "passenger", "pedestrian", "female",
    "male", "adult", "audience", "team", "group", "character", "knight", "king", "queen",
    "prince", "princess", "robot", "astronaut", "pilot", "firefighter", "cowboy",
    // animals
    "animal", "dog", "puppy", "cat", "kitten", "horse", "pony", "bird", "parrot", "duck",
    "chicken", "goose", "cow", "bull", "sheep", "lamb", "goat", "pig", "rabbit", "mouse",
    "rat", "squirrel", "deer", "bear", "lion", "tiger", "leopard", "cheetah", "elephant",
    "giraffe", "zebra", "monkey", "gorilla", "fox", "wolf", "fish", "shark", "whale",
    "dolphin", "turtle", "frog", "snake", "lizard", "butterfly", "bee", "insect", "spider",
    "owl", "eagle", "penguin", "camel", "kangaroo", "panda", "dinosaur", "dragon",
    // body parts
    "hand", "face", "hair", "head", "arm", "leg", "foot", "eye", "mouth", "finger", "nose",
    "ear", "shoulder", "back", "body", "lip", "tooth", "beard",
    // vehicles and transport
    "vehicle", "car", "truck", "bus", "train", "bicycle", "bike", "motorcycle", "motorbike",
    "scooter", "boat", "ship", "airplane", "plane", "helicopter", "van", "taxi", "tractor",
    "wheel", "steering", "seat", "road", "street", "highway", "bridge", "track", "traffic",
    "light", "sign", "parking", "lot", "station", "airport",
    // clothing and accessories
    "shirt", "jacket", "coat", "dress", "skirt", "pants", "jeans", "shorts", "hat", "cap",
    "helmet", "shoe", "boot", "sock", "glove", "scarf", "tie", "suit", "uniform", "sweater",
    "hoodie", "sunglasses", "glasses", "mask", "bag", "backpack", "purse", "wallet",
    "umbrella", "watch", "necklace", "ring", "earring", "bracelet", "belt", "costume",
    // household and objects
    "cup", "mug", "glass", "bottle", "plate", "bowl", "fork", "knife", "spoon", "chopsticks",
    "table", "chair", "sofa", "couch", "bed", "pillow", "blanket", "lamp", "desk", "shelf",
    "cabinet", "door", "window", "wall", "floor", "ceiling", "stairs", "mirror", "clock",
    "phone", "smartphone", "camera", "laptop", "computer", "keyboard", "screen", "monitor",
    "television", "tv", "remote", "book", "notebook", "paper", "pen", "pencil", "box",
    "basket", "bucket", "toy", "ball", "doll", "teddy", "kite", "frisbee", "racket", "bat",
    "skateboard", "surfboard", "ski", "guitar", "piano", "violin", "drum", "microphone",
    "speaker", "headphones", "candle", "vase", "flower", "plant", "tree", "towel", "sink",
    "toilet", "bathtub", "refrigerator", "fridge", "oven", "microwave", "stove", "pan", "pot",
    "kettle", "tray", "jar", "can", "bench", "fence", "gate", "tent", "flag", "banner",
    "poster", "painting", "picture", "photo", "selfie", "portrait", "card", "key", "tool",
    "hammer", "ladder", "rope", "chain", "sword", "shield", "gun", "weapon", "trophy",
    "gift", "present", "balloon", "cake", "candy", "coffee", "tea", "wine", "beer", "water",
    "juice", "milk", "food", "meal", "pizza", "burger", "sandwich", "bread", "salad", "fruit",
    "apple", "banana", "orange", "lemon", "grape", "strawberry", "vegetable", "carrot",
    "tomato", "potato", "egg", "meat", "rice", "noodle", "soup", "dessert", "cookie",
    "tennis", "baseball", "basketball", "football", "soccer", "golf", "game",
    // places and scenery
    "structure", "building", "house", "home", "room", "kitchen", "bedroom", "bathroom",
    "office", "restaurant", "cafe", "shop", "store", "market", "mall", "school", "classroom",
    "church", "temple", "castle", "tower", "city", "town", "village", "park", "garden",
    "yard", "field", "farm", "forest", "jungle", "mountain", "hill", "valley", "river",
    "lake", "sea", "ocean", "beach", "sand", "wave", "island", "desert", "snow", "ice", "sky",
    "cloud", "sun", "moon", "star", "rain", "grass", "rock", "stone", "cave", "waterfall",
    "stage", "studio", "gym", "pool", "court", "stadium", "arena", "hall", "corridor",
    "balcony", "roof", "porch", "sidewalk", "crosswalk", "alley", "path", "trail", "background",
    "scene", "landscape", "night", "day", "sunset", "sunrise", "fire", "smoke",
};

constexpr std::string_view kPersonLabels[] = {
    "person", "man", "woman", "boy", "girl", "child", "kid", "baby", "toddler", "teenager",
    "lady", "gentleman", "guy", "people", "player", "driver", "worker", "chef", "cook",
    "doctor", "nurse", "teacher", "student", "soldier", "police", "officer", "farmer",
    "musician", "singer", "dancer", "athlete", "runner", "rider", "skier", "surfer",
    "skateboarder", "customer", "mother", "father", "daughter", "son", "brother", "sister",
    "grandmother", "grandfather", "bride", "groom", "actor", "actress", "host", "reporter",
    "operator", "passenger", "pedestrian", "female", "male", "adult", "character", "knight",
    "king", "queen", "prince", "princess", "astronaut", "pilot", "firefighter", "cowboy",
};

constexpr std::string_view kAnimalLabels[] = {
    "animal", "dog", "puppy", "cat", "kitten", "horse", "pony", "bird", "parrot", "duck",
    "chicken", "goose", "cow", "bull", "sheep", "lamb", "goat", "pig", "rabbit", "mouse",
    "rat", "squirrel", "deer", "bear", "lion", "tiger", "leopard", "cheetah", "elephant",
    "giraffe", "zebra", "monkey", "gorilla", "fox", "wolf", "fish", "shark", "whale",
    "dolphin", "turtle", "frog", "snake", "lizard", "butterfly", "bee", "insect", "spider",
    "owl", "eagle", "penguin", "camel", "kangaroo", "panda", "dinosaur", "dragon",
};

constexpr std::string_view kGenericEntityClasses[] = {
    "person", "man", "woman", "boy", "girl", "child", "baby", "dog", "cat", "horse", "bird",
    "cow", "sheep", "animal",
};

const std::unordered_map<std::string_view, std::string_view>& Irregular() {
  static const std::unordered_map<std::string_view, std::string_view> kMap = {
      {"women", "woman"}, {"men", "man"},       {"children", "child"}, {"feet", "foot"},
      {"teeth", "tooth"}, {"mice", "mouse"},    {"geese", "goose"},    {"knives", "knife"},
      {"leaves", "leaf"}, {"wolves", "wolf"},   {"shelves", "shelf"},  {"ladies", "lady"},
      {"gentlemen", "gentleman"}, {"policemen", "police"}, {"sheep", "sheep"},
      {"fish", "fish"},   {"deer", "deer"},     {"people", "people"},
  };
  return kMap;
}

template <std::size_t N>
std::unordered_set<std::string_view> MakeSet(const std::string_view (&items)[N]) {
  return std::unordered_set<std::string_view>(std::begin(items), std::end(items));
}

const std::unordered_set<std::string_view>& Stopwords() {
  static const auto kSet = MakeSet(kStopwords);
  return kSet;
}

const std::unordered_set<std::string_view>& Nouns() {
  static const auto kSet = MakeSet(kNouns);
  return kSet;
}

}  // namespace

bool IsStopword(std::string_view token) { return Stopwords().contains(token); }

std::optional<std::string> NounLemma(std::string_view token) {
  const auto& nouns = Nouns();
  if (nouns.contains(token)) return std::string(token);
  if (auto it = Irregular().find(token); it != Irregular().end()) return std::string(it->second);
  auto ends_with = [&](std::string_view suffix) {
    return token.size() > suffix.size() && token.substr(token.size() - suffix.size()) == suffix;
  };
  if (ends_with("ies")) {
    std::string base(token.substr(0, token.size() - 3));
    base += 'y';
    if (nouns.contains(base)) return base;
  }
  if (ends_with("es")) {
    std::string base(token.substr(0, token.size() - 2));
    if (nouns.contains(base)) return base;
  }
  if (ends_with("s")) {
    std::string base(token.substr(0, token.size() - 1));
    if (nouns.contains(base)) return base;
  }
  return std::nullopt;
}

bool IsPersonLabel(std::string_view label) {
  static const auto kSet = MakeSet(kPersonLabels);
  return kSet.contains(label);
}

bool IsAnimalLabel(std::string_view label) {
  static const auto kSet = MakeSet(kAnimalLabels);
  return kSet.contains(label);
}

std::span<const std::string_view> GenericEntityClasses() { return kGenericEntityClasses; }

}  // namespace storyline::lexicon
