//! Test fixtures: the worked two-source profile used across unit tests.
//! The same profile ships as `profiles/two_source.profile`; a round-trip
//! test in `profile_io` pins the two copies against each other.

use crate::ensemble::{
    DeclaredRates, LowerCheckEntry, MultiEdgeProfile, UpperCheckEntry, VarNodeEntry,
};

fn vars(entries: &[(f64, usize, usize)]) -> Vec<VarNodeEntry> {
    entries
        .iter()
        .map(|&(coeff, d1, d2)| VarNodeEntry { coeff, d1, d2 })
        .collect()
}

/// Two sources at design rates (0.5, 0.38), one shared check class of
/// degree 3 + 3, lower graphs of rate 0.7 and 0.58.
pub(crate) fn two_source() -> MultiEdgeProfile {
    let v1 = vars(&[
        (0.244225, 2, 0),
        (0.1531552, 2, 1),
        (0.0209422, 2, 7),
        (0.1930021, 3, 0),
        (0.138759, 3, 3),
        (0.058304, 6, 0),
        (0.0109062, 6, 7),
        (0.000131148, 6, 21),
        (0.05680712, 7, 0),
        (0.047728, 7, 2),
        (0.0556525, 20, 3),
        (0.0203505, 20, 7),
    ]);
    let v2 = vars(&[
        (0.3289203, 2, 0),
        (0.0772109, 2, 1),
        (0.0531292, 2, 2),
        (0.145309, 3, 0),
        (0.0149215, 3, 1),
        (0.123802, 3, 2),
        (0.0286741, 3, 14),
        (0.0346943, 6, 0),
        (0.0101216, 6, 2),
        (0.092595, 7, 0),
        (0.0297043, 7, 7),
        (0.0165257, 20, 0),
        (0.00437642, 20, 1),
        (0.0400163, 20, 3),
    ]);
    MultiEdgeProfile {
        sources: 2,
        vars: vec![v1, v2],
        lowers: vec![
            vec![LowerCheckEntry { coeff: 0.3, d1: 15 }],
            vec![LowerCheckEntry { coeff: 0.42, d1: 10 }],
        ],
        uppers: vec![UpperCheckEntry {
            coeff: 0.4,
            degrees: vec![3, 3],
        }],
        declared: vec![
            DeclaredRates {
                r_plus: Some(0.7),
                r_minus: Some(0.5),
                sigma_plus: Some(0.722955),
                sigma_minus: Some(0.970555),
            },
            DeclaredRates {
                r_plus: Some(0.58),
                r_minus: Some(0.38),
                sigma_plus: Some(0.859273),
                sigma_minus: Some(1.1899),
            },
        ],
    }
}
