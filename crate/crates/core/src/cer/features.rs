//! Context features around a masked occurrence.
//!
//! Only the tokens to the left and right of the mask are used. The masked
//! token itself, and any other mask in the window, never reach a feature
//! string: other masks are replaced by [`MASK_PLACEHOLDER`] before this
//! module sees them.

use serde::{Deserialize, Serialize};

/// Stand-in for a masked token inside a context. Tokens never contain `<`,
/// so it cannot collide with a real word.
pub const MASK_PLACEHOLDER: &str = "<mask>";

pub const DEFAULT_CONTEXT_WINDOW: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSpec {
    /// Tokens per side.
    pub window: usize,
    pub bigrams: bool,
}

impl Default for FeatureSpec {
    fn default() -> Self {
        FeatureSpec {
            window: DEFAULT_CONTEXT_WINDOW,
            bigrams: true,
        }
    }
}

fn bucket(distance: usize) -> &'static str {
    match distance {
        1 => "adj",
        2..=3 => "near",
        _ => "far",
    }
}

/// Feature strings for one occurrence. `left` is in text order, so its last
/// element is adjacent to the mask. Repeated features are kept; each counts once.
pub fn context_features(left: &[String], right: &[String], spec: FeatureSpec) -> Vec<String> {
    let mut out = vec!["bias".to_string()];
    let left_at = |d: usize| left.len().checked_sub(d).map(|i| left[i].as_str());
    let right_at = |d: usize| right.get(d - 1).map(String::as_str);

    for d in 1..=spec.window {
        if let Some(t) = left_at(d) {
            out.push(format!("L|{}|{t}", bucket(d)));
        }
        if let Some(t) = right_at(d) {
            out.push(format!("R|{}|{t}", bucket(d)));
        }
    }
    if spec.bigrams {
        for d in 1..spec.window {
            if let (Some(near), Some(far)) = (left_at(d), left_at(d + 1)) {
                out.push(format!("LB|{}|{far}_{near}", bucket(d)));
            }
            if let (Some(near), Some(far)) = (right_at(d), right_at(d + 1)) {
                out.push(format!("RB|{}|{near}_{far}", bucket(d)));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn words(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn buckets_and_sides() {
        let f = context_features(&words("a b c d"), &words("e f"), FeatureSpec::default());
        for expected in [
            "bias",
            "L|adj|d",
            "L|near|c",
            "L|near|b",
            "L|far|a",
            "R|adj|e",
            "R|near|f",
            "LB|adj|c_d",
            "LB|near|b_c",
            "LB|near|a_b",
            "RB|adj|e_f",
        ] {
            assert!(f.iter().any(|x| x == expected), "missing {expected}: {f:?}");
        }
        assert_eq!(f.len(), 11);
    }

    #[test]
    fn window_limits_reach() {
        let left: Vec<String> = (0..20).map(|i| format!("w{i}")).collect();
        let spec = FeatureSpec {
            window: 3,
            bigrams: false,
        };
        let f = context_features(&left, &[], spec);
        assert_eq!(f, ["bias", "L|adj|w19", "L|near|w18", "L|near|w17"]);
    }

    #[test]
    fn empty_context_is_bias_only() {
        assert_eq!(context_features(&[], &[], FeatureSpec::default()), ["bias"]);
    }
}
