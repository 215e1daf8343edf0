//! Word banks behind the offline mock provider and the synthetic persona pool.

pub struct Domain {
    pub key: &'static str,
    pub topic: &'static str,
    pub description: &'static str,
    /// Persona attribute values that map to this domain.
    pub attr_phrases: &'static [&'static str],
    /// How queries refer to the domain; every term contains `key`. None of
    /// these tokens occur inside messages.
    pub query_terms: &'static [&'static str],
    pub objects: &'static [&'static str],
    pub verbs: &'static [&'static str],
    pub places: &'static [&'static str],
}

impl Domain {
    /// Single-token keywords used for keyword-bucket topic clustering.
    pub fn keywords(&self) -> impl Iterator<Item = &'static str> {
        self.objects.iter().chain(self.verbs.iter()).chain(self.places.iter()).copied()
    }
}

pub const DOMAINS: &[Domain] = &[
    Domain {
        key: "cooking",
        topic: "home cooking",
        description: "recipes, dishes and kitchen experiments",
        attr_phrases: &["experimenting with regional recipes", "hosting dinner parties", "slow cooked comfort food"],
        query_terms: &["cooking", "cooking projects"],
        objects: &["risotto", "dumplings", "curry"],
        verbs: &["simmered", "seasoned"],
        places: &["kitchen", "pantry"],
    },
    Domain {
        key: "gardening",
        topic: "gardening",
        description: "plants, vegetables and backyard beds",
        attr_phrases: &["growing heirloom vegetables", "community garden volunteering", "native flower beds"],
        query_terms: &["gardening", "gardening chores"],
        objects: &["tomatoes", "seedlings", "compost"],
        verbs: &["planted", "pruned"],
        places: &["allotment", "backyard"],
    },
    Domain {
        key: "hiking",
        topic: "hiking trips",
        description: "trails, summits and camping",
        attr_phrases: &["weekend hiking in the mountains", "backcountry camping", "trail running"],
        query_terms: &["hiking", "hiking trips"],
        objects: &["trail", "summit", "backpack"],
        verbs: &["climbed", "trekked"],
        places: &["trailhead", "foothills"],
    },
    Domain {
        key: "music",
        topic: "making music",
        description: "instruments, rehearsals and songs",
        attr_phrases: &["playing guitar in a cover band", "classical piano", "writing folk songs"],
        query_terms: &["music", "music practice"],
        objects: &["guitar", "chords", "piano"],
        verbs: &["strummed", "rehearsed"],
        places: &["studio", "bandstand"],
    },
    Domain {
        key: "painting",
        topic: "painting",
        description: "canvases, colors and sketching",
        attr_phrases: &["watercolor painting", "urban sketching", "oil portraits"],
        query_terms: &["painting", "painting projects"],
        objects: &["canvas", "watercolors", "easel"],
        verbs: &["painted", "sketched"],
        places: &["atelier", "gallery"],
    },
    Domain {
        key: "basketball",
        topic: "basketball",
        description: "pickup games, drills and teams",
        attr_phrases: &["pickup basketball", "coaching youth basketball", "following college hoops"],
        query_terms: &["basketball", "basketball games"],
        objects: &["jumpshot", "layups", "dribbling"],
        verbs: &["practiced", "scored"],
        places: &["gym", "court"],
    },
];

/// Keywords of the closing plans segment.
pub const PLAN_TOPIC: &str = "making plans";
pub const PLAN_DESCRIPTION: &str = "arranging to meet up";
pub const PLAN_KEYWORDS: &[&str] = &["brunch", "calendar", "picnic", "reservation", "meetup", "plans", "schedule"];

pub const PLAN_MESSAGES: &[&str] = &[
    "We should finally set up that brunch we keep talking about, are you free next week?",
    "Yes, let us pick a date, I will check my calendar tonight and text you.",
    "How about a picnic by the lake, I can bring snacks and a blanket.",
    "Perfect, I will make the reservation and put it on my schedule right away.",
    "Great, I am really looking forward to our meetup, it has been too long.",
    "Same here, see you then and good luck with everything until our plans come together!",
];

/// First-person sharing templates: `{o1}`, `{o2}` objects, `{v}` verb, `{p}` place.
pub const SHARE_TEMPLATES: &[&str] = &[
    "I {v} the {o1} and the {o2} yesterday.",
    "My {o1} and {o2} kept me busy all week.",
    "Last night I {v} a {o1}, then redid the {o2}.",
    "Next I want to try a {o2} with my {o1}.",
    "I {v} the {o1}, and the {o2} came out great.",
    "Still working on the {o1}, the {o2} gives me trouble.",
    "Spent the weekend on it, I {v} a {o1} and a new {o2}.",
    "The {o1} I {v} finally matches the {o2}.",
];

/// Reaction templates: `{owner}` is the other speaker's first name, `{p}` a place.
pub const REACTION_TEMPLATES: &[&str] = &[
    "Wow, {owner}, that sounds amazing! How long were you at the {p}?",
    "Really, {owner}? I never knew you spent so much time at the {p}.",
    "That is so cool, {owner}. Was the {p} busy?",
    "Ha, {owner}, I can picture you at the {p}. Send me a snapshot sometime!",
    "No way, {owner}! Which {p} do you go to?",
    "Oh nice, {owner}. Is the {p} far from you?",
];

pub const GREETING_OPEN: &str = "Hey {other}! It feels like ages since we last talked, how have you been?";
pub const GREETING_REPLY: &str = "Hi {other}! I am doing well, it has been a busy couple of weeks for me.";

/// Event templates: `{name}` full name, `{o1}` object, `{v}` verb, `{p}` place.
pub const EVENT_TEMPLATES: &[&str] = &[
    "{name} spent the morning at the {p} working on a {o1} before lunch.",
    "{name} {v} a {o1} after work and showed it to a coworker the next day.",
    "{name} picked up groceries, then {v} a {o1} while listening to a podcast.",
    "{name} met an old friend at the {p} and talked about a {o1} for an hour.",
    "{name} cleaned the apartment, answered emails, and later looked at a new {o1} online.",
    "{name} called a sibling in the evening and mentioned the {o1} from the {p}.",
];

pub const FIRST_NAMES: &[&str] = &[
    "Maria", "James", "Aisha", "Tomas", "Priya", "Daniel", "Mei", "Samuel", "Elena", "Kwame", "Sofia", "Liam",
    "Hana", "Omar", "Grace", "Mateo", "Nadia", "Ethan", "Yuki", "Carlos", "Fatima", "Noah", "Ingrid", "Ravi",
    "Chloe", "Diego", "Leila", "Oscar", "Amara", "Felix", "Zara", "Hugo", "Naomi", "Arjun", "Clara", "Malik",
    "Lucia", "Tariq", "Vera", "Jonah",
];

pub const LAST_NAMES: &[&str] = &[
    "Lopez", "Carter", "Okafor", "Novak", "Sharma", "Kim", "Chen", "Moreau", "Rossi", "Mensah", "Silva", "Walsh",
    "Tanaka", "Haddad", "Brennan", "Ortiz", "Petrov", "Nguyen", "Larsen", "Iyer", "Dubois", "Adeyemi", "Fischer",
    "Morales", "Quinn", "Sato", "Bauer", "Costa", "Ward", "Reyes",
];

pub const CITIES: &[(&str, &str)] = &[
    ("Atlanta", "Georgia"),
    ("Denver", "Colorado"),
    ("Portland", "Oregon"),
    ("Austin", "Texas"),
    ("Madison", "Wisconsin"),
    ("Tucson", "Arizona"),
    ("Raleigh", "North Carolina"),
    ("Boise", "Idaho"),
    ("Columbus", "Ohio"),
    ("Sacramento", "California"),
];

pub const EDUCATION_LEVELS: &[&str] = &["high school", "associate degree", "bachelors", "masters", "doctorate"];
pub const EDUCATION_FIELDS: &[&str] =
    &["biology", "accounting", "mechanical engineering", "history", "nursing", "computer science", "marketing", "education"];
pub const OCCUPATIONS: &[&str] = &[
    "aerospace engineer",
    "school teacher",
    "nurse",
    "software developer",
    "accountant",
    "librarian",
    "electrician",
    "graphic designer",
    "pharmacist",
    "sales manager",
];
pub const MARITAL: &[&str] = &["single", "married", "divorced", "widowed"];
pub const CAREER_GOALS: &[&str] =
    &["opening a small business", "earning a promotion", "retiring near the coast", "mentoring new hires"];

/// Personality attribute keys for the synthetic pool. Values are drawn from
/// domain attribute phrases, except the professional persona.
pub const PERSONALITY_KEYS: &[&str] = &[
    "arts_interests",
    "culinary_interests",
    "hobbies",
    "skills",
    "sports_interests",
    "travel_interests",
];
