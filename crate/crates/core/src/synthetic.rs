//! Seeded generators for toy corpora and template comment datasets.

use chrono::{Duration, NaiveDate};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::corpus::{Addressee, Comment, LabelSet, LabeledDataset};
use crate::seed;
use crate::textprep::TokenStream;

fn stream(id: String, tokens: Vec<String>) -> TokenStream {
    TokenStream { tokens, source_id: id }
}

/// A corpus where `pair.0` and `pair.1` occur in identical contexts: every
/// frame sentence `a b _ c d` is emitted once with each word in the slot.
/// All other words belong to exactly one frame.
pub fn synonym_corpus(seed: u64, pair: (&str, &str), frames: usize, repeats: usize) -> Vec<TokenStream> {
    let mut rng = seed::rng(seed::derive_seed(seed, "synonym-corpus"));
    let mut out = Vec::new();
    for r in 0..repeats {
        let mut order: Vec<usize> = (0..frames).collect();
        order.shuffle(&mut rng);
        for f in order {
            let w = |k: usize| format!("w{f}x{k}");
            for slot in [pair.0, pair.1] {
                let tokens = vec![w(0), w(1), slot.to_string(), w(2), w(3)];
                out.push(stream(format!("s{r}-{f}-{slot}"), tokens));
            }
        }
    }
    out
}

/// Documents drawn from disjoint topic vocabularies; returns streams and topic ids.
pub fn topic_corpus(
    seed: u64,
    n_topics: usize,
    words_per_topic: usize,
    docs_per_topic: usize,
    doc_len: usize,
) -> (Vec<TokenStream>, Vec<usize>) {
    let mut rng = seed::rng(seed::derive_seed(seed, "topic-corpus"));
    let mut docs = Vec::new();
    let mut topics = Vec::new();
    for d in 0..docs_per_topic {
        for t in 0..n_topics {
            let tokens = (0..doc_len)
                .map(|_| format!("t{t}w{}", rng.gen_range(0..words_per_topic)))
                .collect();
            docs.push(stream(format!("d{t}-{d}"), tokens));
            topics.push(t);
        }
    }
    (docs, topics)
}

/// Addressee keyword vocabularies used by [`template_dataset`].
pub fn template_keywords(a: Addressee) -> &'static [&'static str] {
    match a {
        Addressee::Media => &["spiegel", "spon", "redaktion", "medien", "berichterstattung", "magazin", "presse"],
        Addressee::Journalist => &["autor", "artikel", "journalist", "redakteur", "kolumnist", "verfasser", "reporter"],
        Addressee::Moderator => &["zensur", "moderator", "sysop", "moderation", "admin", "zensiert", "forenregeln"],
    }
}

const SUBJECTS: &[&str] = &["Die Regierung", "Der Minister", "Die Opposition", "Die Partei", "Der Verein", "Die Stadt", "Das Land", "Die Firma", "Der Trainer", "Die Polizei"];
const VERBS: &[&str] = &["plant", "verspricht", "kritisiert", "fordert", "ignoriert", "verteidigt", "beschließt", "verschiebt", "diskutiert", "unterstützt"];
const OBJECTS: &[&str] = &["die Steuerreform", "den Haushalt", "neue Regeln", "die Rente", "das Projekt", "die Wahl", "den Ausbau", "die Energiewende", "die Verträge", "die Grenzen"];
const OPINIONS: &[&str] = &["Das ist doch absurd", "Ich halte das für richtig", "Endlich passiert etwas", "Typisch für diese Zeit", "Das wird teuer", "Da bin ich skeptisch", "Gute Idee", "Warum erst jetzt"];

const META_FRAMES: &[&str] = &[
    "Liebe {k}, das ist schwach.",
    "Was soll das, {k}?",
    "Ich vermisse hier {k} mit Niveau.",
    "Schon wieder {k} ohne Fakten.",
    "Danke an {k} für die Klarstellung.",
    "Die {k} sollte sich schämen.",
];

fn pick<'a, R: Rng>(rng: &mut R, items: &[&'a str]) -> &'a str {
    items[rng.gen_range(0..items.len())]
}

fn topic_sentence<R: Rng>(rng: &mut R) -> String {
    format!("{} {} {}. {}.", pick(rng, SUBJECTS), pick(rng, VERBS), pick(rng, OBJECTS), pick(rng, OPINIONS))
}

fn meta_sentence<R: Rng>(rng: &mut R, a: Addressee) -> String {
    let frame = pick(rng, META_FRAMES);
    let k = pick(rng, template_keywords(a));
    let k = if rng.gen_bool(0.3) {
        let mut c = k.chars();
        c.next().map(|f| f.to_uppercase().collect::<String>() + c.as_str()).unwrap_or_default()
    } else {
        k.to_string()
    };
    frame.replace("{k}", &k)
}

/// `n` template comments: half non-meta (topic sentences only, no addressee
/// keywords), half meta with one or two addressees whose keywords appear in
/// the text. Optional metadata is filled at random.
pub fn template_dataset(seed: u64, n: usize) -> LabeledDataset {
    let mut rng = seed::rng(seed::derive_seed(seed, "template-dataset"));
    let mut ds = LabeledDataset::new("synthetic");
    let departments = ["politik", "wirtschaft", "kultur", "sport"];
    let start = NaiveDate::from_ymd_opt(2018, 1, 1)
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .expect("valid date");
    for i in 0..n {
        let is_meta = i % 2 == 0;
        let mut parts = vec![topic_sentence(&mut rng)];
        let labels = if is_meta {
            let first = Addressee::ALL[(i / 2) % 3];
            let mut addressees = vec![first];
            if rng.gen_bool(0.2) {
                let second = Addressee::ALL[(first as usize + rng.gen_range(1..3)) % 3];
                addressees.push(second);
            }
            for a in &addressees {
                parts.push(meta_sentence(&mut rng, *a));
            }
            LabelSet::meta(&addressees)
        } else {
            parts.push(topic_sentence(&mut rng));
            LabelSet::non_meta()
        };
        parts.shuffle(&mut rng);
        let ts = start + Duration::minutes(rng.gen_range(0..60 * 24 * 365));
        let title = if rng.gen_bool(0.5) { pick(&mut rng, OPINIONS).to_string() } else { String::new() };
        let mut c = Comment::new(format!("syn{i:05}"), title, parts.join(" "), ts);
        c.department = Some(departments[rng.gen_range(0..departments.len())].to_string());
        c.position = Some(rng.gen_range(1..200));
        c.has_quote = Some(rng.gen_bool(0.4));
        ds.push(c, labels).expect("generated ids are unique");
    }
    ds
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Label;

    #[test]
    fn template_dataset_is_balanced_and_deterministic() {
        let a = template_dataset(3, 300);
        let b = template_dataset(3, 300);
        assert_eq!(a, b);
        assert_eq!(a.label_count(Label::Meta), 150);
        assert_eq!(a.label_count(Label::NonMeta), 150);
        for ad in Addressee::ALL {
            assert!(a.label_count(ad.label()) >= 50);
        }
    }

    #[test]
    fn synonym_pair_shares_frames() {
        let c = synonym_corpus(1, ("kaffee", "tee"), 3, 2);
        assert_eq!(c.len(), 12);
        assert_eq!(c[0].tokens[..2], c[1].tokens[..2]);
        assert_eq!(c[0].tokens[2], "kaffee");
        assert_eq!(c[1].tokens[2], "tee");
    }
}
