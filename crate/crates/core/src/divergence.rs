//! Divergences and distances between label distributions.
//!
//! KL divergence is measured in nats. Use [`nats_to_bits`] when a report
//! wants base-2 units.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum DivergenceKind {
    Kl,
    Euclidean,
    Chebyshev,
    Canberra,
}

impl DivergenceKind {
    /// Symmetric measures give symmetric neighborhoods.
    pub fn is_symmetric(self) -> bool {
        !matches!(self, DivergenceKind::Kl)
    }
}

impl fmt::Display for DivergenceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DivergenceKind::Kl => "kl",
            DivergenceKind::Euclidean => "euclidean",
            DivergenceKind::Chebyshev => "chebyshev",
            DivergenceKind::Canberra => "canberra",
        })
    }
}

fn check_len(p: &[f64], q: &[f64]) -> Result<()> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            found: q.len(),
        });
    }
    Ok(())
}

/// `KL(p || q) = sum_y p[y] ln(p[y] / q[y])`; terms with `p[y] = 0` vanish.
pub fn kl(p: &[f64], q: &[f64]) -> Result<f64> {
    check_len(p, q)?;
    let mut total = 0.0;
    for (index, (&pi, &qi)) in p.iter().zip(q).enumerate() {
        if pi == 0.0 {
            continue;
        }
        if qi == 0.0 {
            return Err(Error::UndefinedDivergence { index, p: pi });
        }
        total += pi * (pi / qi).ln();
    }
    // cancellation can leave a tiny negative residue
    Ok(total.max(0.0))
}

pub fn euclidean(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

pub fn chebyshev(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

/// Canberra metric; `0/0` terms count as zero.
pub fn canberra(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .map(|(a, b)| {
            let den = a.abs() + b.abs();
            if den == 0.0 {
                0.0
            } else {
                (a - b).abs() / den
            }
        })
        .sum()
}

pub fn distance(p: &[f64], q: &[f64], kind: DivergenceKind) -> Result<f64> {
    check_len(p, q)?;
    Ok(match kind {
        DivergenceKind::Kl => kl(p, q)?,
        DivergenceKind::Euclidean => euclidean(p, q),
        DivergenceKind::Chebyshev => chebyshev(p, q),
        DivergenceKind::Canberra => canberra(p, q),
    })
}

pub fn nats_to_bits(nats: f64) -> f64 {
    nats / std::f64::consts::LN_2
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn kl_hand_values() {
        // 0.5 ln 2 + 0.5 ln(2/3)
        let v = kl(&[0.5, 0.5], &[0.25, 0.75]).unwrap();
        assert!((v - 0.143_841_036).abs() < 1e-8, "{v}");
        let v = kl(&[1.0, 0.0], &[0.5, 0.5]).unwrap();
        assert!((v - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn kl_is_asymmetric() {
        let p = [0.5, 0.5];
        let q = [0.25, 0.75];
        assert!((kl(&p, &q).unwrap() - kl(&q, &p).unwrap()).abs() > 1e-3);
    }

    #[test]
    fn kl_undefined_on_zero_denominator() {
        assert!(matches!(
            kl(&[0.5, 0.5], &[1.0, 0.0]),
            Err(Error::UndefinedDivergence { index: 1, .. })
        ));
    }

    #[test]
    fn metric_hand_values() {
        assert!((euclidean(&[1.0, 0.0], &[0.0, 1.0]) - 2f64.sqrt()).abs() < 1e-15);
        assert!((chebyshev(&[0.2, 0.8], &[0.5, 0.5]) - 0.3).abs() < 1e-12);
        // 0.2/0.6 + 0.2/1.4
        assert!((canberra(&[0.2, 0.8], &[0.4, 0.6]) - 0.476_190_476).abs() < 1e-8);
        assert_eq!(canberra(&[0.0, 1.0], &[0.0, 1.0]), 0.0);
    }

    #[test]
    fn length_mismatch() {
        assert!(distance(&[0.5, 0.5], &[1.0], DivergenceKind::Euclidean).is_err());
    }

    fn simplex(d: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.01f64..1.0, d).prop_map(|v| {
            let s: f64 = v.iter().sum();
            v.into_iter().map(|x| x / s).collect()
        })
    }

    proptest! {
        #[test]
        fn metrics_symmetric_and_triangle(
            (p, q, r) in (2usize..7).prop_flat_map(|d| (simplex(d), simplex(d), simplex(d)))
        ) {
            for kind in [DivergenceKind::Euclidean, DivergenceKind::Chebyshev] {
                let pq = distance(&p, &q, kind).unwrap();
                prop_assert!((pq - distance(&q, &p, kind).unwrap()).abs() < 1e-15);
                let pr = distance(&p, &r, kind).unwrap();
                let rq = distance(&r, &q, kind).unwrap();
                prop_assert!(pq <= pr + rq + 1e-12);
            }
            for kind in [DivergenceKind::Kl, DivergenceKind::Euclidean, DivergenceKind::Chebyshev, DivergenceKind::Canberra] {
                prop_assert_eq!(distance(&p, &p, kind).unwrap(), 0.0);
            }
            prop_assert!(kl(&p, &q).unwrap() >= 0.0);
        }
    }
}
