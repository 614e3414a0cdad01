use serde::{Deserialize, Serialize};

/// Sequence unit for edit distances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "UPPERCASE")]
pub enum DistanceUnit {
    /// Whitespace-separated words.
    #[default]
    #[serde(alias = "token")]
    Token,
    /// Unicode scalar values.
    #[serde(alias = "char")]
    Char,
}

/// Unit-cost insert/delete/substitute distance, two-row dynamic program.
pub fn levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Raw distance between two strings in the given unit.
pub fn edit_distance(a: &str, b: &str, unit: DistanceUnit) -> usize {
    match unit {
        DistanceUnit::Token => {
            let ta: Vec<&str> = a.split_whitespace().collect();
            let tb: Vec<&str> = b.split_whitespace().collect();
            levenshtein(&ta, &tb)
        }
        DistanceUnit::Char => {
            let ca: Vec<char> = a.chars().collect();
            let cb: Vec<char> = b.chars().collect();
            levenshtein(&ca, &cb)
        }
    }
}

fn unit_len(s: &str, unit: DistanceUnit) -> usize {
    match unit {
        DistanceUnit::Token => s.split_whitespace().count(),
        DistanceUnit::Char => s.chars().count(),
    }
}

/// Edit distance divided by the longer sequence length; 0 when both are empty.
pub fn norm_levenshtein(a: &str, b: &str, unit: DistanceUnit) -> f64 {
    let longest = unit_len(a, unit).max(unit_len(b, unit));
    if longest == 0 {
        return 0.0;
    }
    edit_distance(a, b, unit) as f64 / longest as f64
}
