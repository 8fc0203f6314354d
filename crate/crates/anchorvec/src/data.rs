//! Built-in anchor, hold-out and antonym-pair lists.

/// Anchor file for `dimension` (`gender` or `sentiment`) and `set` (`few`
/// or `many`).
pub fn anchors(dimension: &str, set: &str) -> Option<&'static str> {
    Some(match (dimension, set) {
        ("gender", "few") => include_str!("../data/gender_few.toml"),
        ("gender", "many") => include_str!("../data/gender_many.toml"),
        ("sentiment", "few") => include_str!("../data/sentiment_few.toml"),
        ("sentiment", "many") => include_str!("../data/sentiment_many.toml"),
        _ => return None,
    })
}

pub fn holdout(dimension: &str) -> Option<&'static str> {
    Some(match dimension {
        "gender" => include_str!("../data/gender_holdout.toml"),
        "sentiment" => include_str!("../data/sentiment_holdout.toml"),
        _ => return None,
    })
}

pub fn pairs(dimension: &str) -> Option<&'static str> {
    Some(match dimension {
        "gender" => include_str!("../data/gender_pairs.tsv"),
        "sentiment" => include_str!("../data/sentiment_pairs.tsv"),
        _ => return None,
    })
}
