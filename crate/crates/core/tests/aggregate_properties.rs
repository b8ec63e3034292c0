use proptest::prelude::*;
use psv_core::aggregate::{pair_scores, pairwise_matrix, Channel, Family};
use psv_core::stance::{Psv, Stance};

fn row() -> impl Strategy<Value = [f64; 3]> {
    (0.0f64..1.0, 0.0f64..1.0).prop_map(|(a, b)| {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        [lo, hi - lo, 1.0 - hi]
    })
}

fn psv(id: &str, rows: Vec<[f64; 3]>) -> Psv {
    Psv {
        argument_id: id.into(),
        signature_ref: "t@0".into(),
        values: rows.iter().map(Stance::argmax).collect(),
        rows,
    }
}

fn pair() -> impl Strategy<Value = (Psv, Psv)> {
    (1usize..16).prop_flat_map(|n| {
        (
            proptest::collection::vec(row(), n),
            proptest::collection::vec(row(), n),
        )
            .prop_map(|(a, b)| (psv("a", a), psv("b", b)))
    })
}

fn range(family: Family) -> std::ops::RangeInclusive<f64> {
    match family {
        Family::SD | Family::PD => -1.0 - 1e-12..=1.0 + 1e-12,
        _ => -1e-12..=1.0 + 1e-12,
    }
}

proptest! {
    #[test]
    fn every_channel_is_symmetric_and_in_range((v1, v2) in pair()) {
        for family in Family::ALL {
            let ab = pair_scores(&v1, &v2, family).unwrap();
            let ba = pair_scores(&v2, &v1, family).unwrap();
            for &ch in family.channels() {
                prop_assert_eq!(ab.per_concept(ch).unwrap(), ba.per_concept(ch).unwrap());
                let g = ab.global(ch).unwrap();
                prop_assert!(range(family).contains(&g), "{} {} = {}", family, ch, g);
            }
        }
    }

    #[test]
    fn matrix_is_symmetric_with_self_pairs_on_the_diagonal(
        rows in proptest::collection::vec(proptest::collection::vec(row(), 5), 1..8)
    ) {
        let psvs: Vec<Psv> = rows.into_iter().enumerate().map(|(i, r)| psv(&format!("a{i}"), r)).collect();
        for family in Family::ALL {
            for &ch in family.channels() {
                let m = pairwise_matrix(&psvs, family, ch).unwrap();
                for i in 0..psvs.len() {
                    let own = pair_scores(&psvs[i], &psvs[i], family).unwrap().global(ch).unwrap();
                    prop_assert_eq!(m.values[i][i], own);
                    for j in 0..psvs.len() {
                        prop_assert_eq!(m.values[i][j], m.values[j][i]);
                    }
                }
                prop_assert_eq!(m.upper_pairs().count(), psvs.len() * (psvs.len() - 1) / 2);
            }
        }
    }
}

/// On one-hot rows the probability families reproduce the discrete ones where
/// the formulas coincide: all of `P`, agreement of `P0`, and every channel of
/// `P0`/`PD` when no side is neutral.
#[test]
fn one_hot_rows_match_discrete_values_where_formulas_coincide() {
    for a in [-1i8, 0, 1] {
        for b in [-1i8, 0, 1] {
            let v1 = Psv::from_values("a", "t@0", vec![Stance::from_value(a).unwrap()]);
            let v2 = Psv::from_values("b", "t@0", vec![Stance::from_value(b).unwrap()]);
            let g = |f: Family, c: Channel| pair_scores(&v1, &v2, f).unwrap().global(c).unwrap();
            for c in [Channel::Agreement, Channel::Disagreement] {
                assert_eq!(g(Family::P, c), g(Family::S, c), "P/S {c} ({a},{b})");
            }
            assert_eq!(
                g(Family::P0, Channel::Agreement),
                g(Family::S0, Channel::Agreement)
            );
            if a != 0 && b != 0 {
                for c in Channel::ALL {
                    assert_eq!(g(Family::P0, c), g(Family::S0, c), "P0/S0 {c} ({a},{b})");
                }
                for c in [Channel::Agreement, Channel::Disagreement] {
                    assert_eq!(g(Family::PD, c), g(Family::SD, c), "PD/SD {c} ({a},{b})");
                }
            }
        }
    }
}

/// One side neutral: `P0` keeps half the polar mass as disagreement and no
/// orthogonality, while `S0` scores the concept as orthogonal.
#[test]
fn one_neutral_side_separates_p0_from_s0() {
    let v1 = Psv::from_values("a", "t@0", vec![Stance::Favor]);
    let v2 = Psv::from_values("b", "t@0", vec![Stance::Neutral]);
    let p0 = pair_scores(&v1, &v2, Family::P0).unwrap();
    let s0 = pair_scores(&v1, &v2, Family::S0).unwrap();
    assert_eq!(Channel::ALL.map(|c| p0.global(c).unwrap()), [0.0, 0.0, 0.5]);
    assert_eq!(Channel::ALL.map(|c| s0.global(c).unwrap()), [0.0, 1.0, 0.0]);
}
