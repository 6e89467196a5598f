//! Cross-checks the exact linear algebra against an independent
//! floating-point oracle (SVD rank from nalgebra).

use fj_analysis::expr::{rational_to_float, Context, Expr};
use fj_analysis::linalg::{invert, left_null_space, rank, SymMatrix};
use num::rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_rational(rng: &mut impl Rng) -> BigRational {
    let numer = rng.gen_range(-6i64..=6);
    let denom = rng.gen_range(1i64..=6);
    BigRational::new(numer.into(), denom.into())
}

#[test]
fn symbolic_rank_matches_svd_oracle_on_50_matrices() {
    let ctx = Context::new();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..50 {
        let rows = rng.gen_range(1..=5usize);
        let cols = rng.gen_range(1..=5usize);
        let mut entries: Vec<Vec<BigRational>> = (0..rows)
            .map(|_| (0..cols).map(|_| random_rational(&mut rng)).collect())
            .collect();
        // force rank deficiency in a third of the cases by copying a row
        if rows >= 2 && case % 3 == 0 {
            let src = rng.gen_range(0..rows);
            let dst = (src + 1) % rows;
            entries[dst] = entries[src].clone();
        }
        let m = SymMatrix::from_rows(
            entries
                .iter()
                .map(|r| r.iter().map(|q| Expr::from_rational(q.clone())).collect())
                .collect(),
        );
        let na = nalgebra::DMatrix::from_fn(rows, cols, |i, j| rational_to_float(&entries[i][j]));
        let oracle = na.svd(false, false).rank(1e-9);
        let symbolic = rank(&m, &ctx);
        assert_eq!(symbolic, oracle, "case {case}: {entries:?}");

        // structural cross-checks on the same matrix
        let modes = left_null_space(&m, &ctx);
        assert_eq!(modes.len(), rows - symbolic, "case {case}: nullity");
        for mode in &modes {
            let v = SymMatrix::from_rows(vec![mode.components.clone()]);
            let prod = v.mul(&m, &ctx).unwrap();
            assert!((0..cols).all(|j| prod.at(0, j).is_zero()));
        }
        if rows == cols {
            match invert(&m, &ctx) {
                Ok(inv) => {
                    assert_eq!(symbolic, rows, "case {case}: inverted a singular matrix");
                    let prod = m.mul(&inv, &ctx).unwrap();
                    for i in 0..rows {
                        for j in 0..cols {
                            let want = if i == j { Expr::one() } else { Expr::zero() };
                            assert_eq!(prod.at(i, j), &want);
                        }
                    }
                }
                Err(_) => assert!(symbolic < rows, "case {case}: refused a regular matrix"),
            }
        }
    }
}
