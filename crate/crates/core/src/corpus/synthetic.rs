//! Generated two-class task: the label is decided by a keyword in the first
//! sentence; the remaining sentences are neutral filler.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::dataset::RawExample;

pub const POSITIVE: &[&str] = &["excellent", "wonderful", "superb", "delightful"];
pub const NEGATIVE: &[&str] = &["terrible", "awful", "dreadful", "horrible"];

const FILLER: &[&str] = &[
    "the", "a", "movie", "story", "plot", "actor", "scene", "film", "was", "is", "and", "with",
    "of", "in", "on", "it", "this", "that", "some", "many", "people", "city", "house", "road",
    "night", "day", "music", "camera", "light", "water", "train", "window", "table", "paper",
    "garden", "river", "street", "friend", "family", "school", "winter", "summer", "morning",
    "evening", "color", "voice", "letter", "picture", "market", "station",
];

fn sentence<R: Rng>(rng: &mut R, keyword: Option<&str>) -> String {
    let len = rng.gen_range(4..=8);
    let mut words: Vec<String> = (0..len)
        .map(|_| FILLER.choose(rng).unwrap().to_string())
        .collect();
    if let Some(k) = keyword {
        let pos = rng.gen_range(0..=words.len());
        words.insert(pos, k.to_string());
    }
    // optional clause break
    if rng.gen_bool(0.5) && words.len() > 3 {
        let at = rng.gen_range(1..words.len() - 2);
        words[at].push(',');
    }
    let end = [".", ".", "!", "?"][rng.gen_range(0..4)];
    format!("{}{}", words.join(" "), end)
}

/// `n` examples with labels "neg"/"pos", three sentences each.
pub fn keyword_task(n: usize, seed: u64) -> Vec<RawExample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let positive = rng.gen_bool(0.5);
            let keyword = if positive {
                POSITIVE.choose(&mut rng).unwrap()
            } else {
                NEGATIVE.choose(&mut rng).unwrap()
            };
            let text = [
                sentence(&mut rng, Some(keyword)),
                sentence(&mut rng, None),
                sentence(&mut rng, None),
            ]
            .join(" ");
            RawExample {
                label: if positive { "pos" } else { "neg" }.to_string(),
                text,
                line: i + 1,
            }
        })
        .collect()
}

/// Writes examples as `label<TAB>text` lines.
pub fn to_tsv(examples: &[RawExample]) -> String {
    examples
        .iter()
        .map(|e| format!("{}\t{}\n", e.label, e.text))
        .collect()
}
