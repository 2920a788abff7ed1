use crate::error::{Error, Result};

/// A rational point `(x, y) / den` on the unit circle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RationalDirection {
    pub num: [i64; 2],
    pub den: i64,
}

impl RationalDirection {
    pub fn to_f64(self) -> [f64; 2] {
        [
            self.num[0] as f64 / self.den as f64,
            self.num[1] as f64 / self.den as f64,
        ]
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Image of `t = p/q` under the inverse stereographic projection from
/// `(-1, 0)`: `((q^2 - p^2), 2pq) / (p^2 + q^2)`. `q = 0` gives `(-1, 0)`.
fn project(p: i64, q: i64) -> RationalDirection {
    let (x, y, d) = (q * q - p * p, 2 * p * q, p * p + q * q);
    let g = gcd(gcd(x, y), d);
    RationalDirection {
        num: [x / g, y / g],
        den: d / g,
    }
}

/// The first `count` unit vectors with rational coordinates, ordered by the
/// height `max(|p|, q)` of their stereographic parameter `p/q`, then by `p/q`.
pub fn rational_directions(count: usize) -> Vec<RationalDirection> {
    let mut out: Vec<RationalDirection> = Vec::with_capacity(count);
    let mut h: i64 = 1;
    while out.len() < count {
        let mut params: Vec<(i64, i64)> = Vec::new();
        for q in 1..=h {
            for p in -h..=h {
                if (p.abs() == h || q == h) && gcd(p, q) == 1 {
                    params.push((p, q));
                }
            }
        }
        params.sort_by(|a, b| (a.0 * b.1).cmp(&(b.0 * a.1)));
        if h == 1 {
            params.push((1, 0));
        }
        for (p, q) in params {
            let d = project(p, q);
            if !out.contains(&d) {
                out.push(d);
                if out.len() == count {
                    break;
                }
            }
        }
        h += 1;
    }
    out
}

/// Spreading envelope `w*(e) = min over sampled e' with e'.e > 0 of
/// c*(e') / (e'.e)` for each query direction.
pub fn fg_envelope(samples: &[(Vec<f64>, f64)], queries: &[Vec<f64>]) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::InvalidParameter("no speed samples".into()));
    }
    if let Some((d, c)) = samples.iter().find(|(_, c)| !(*c >= 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "sample {d:?} has speed {c}, expected >= 0"
        )));
    }
    let unit = |v: &[f64]| -> Result<Vec<f64>> {
        let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if !(n > 0.0) {
            return Err(Error::InvalidParameter("zero direction".into()));
        }
        Ok(v.iter().map(|a| a / n).collect())
    };
    let samples = samples
        .iter()
        .map(|(d, c)| Ok((unit(d)?, *c)))
        .collect::<Result<Vec<_>>>()?;
    queries
        .iter()
        .map(|q| {
            let e = unit(q)?;
            if e.len() != samples[0].0.len() {
                return Err(Error::InvalidParameter("direction dimension mismatch".into()));
            }
            samples
                .iter()
                .filter_map(|(d, c)| {
                    let dot: f64 = d.iter().zip(&e).map(|(a, b)| a * b).sum();
                    // e'.e <= 1 for unit vectors, up to rounding when e' = e.
                    (dot > 1e-12).then(|| c / dot.min(1.0))
                })
                .reduce(f64::min)
                .ok_or_else(|| Error::UndefinedDirection(q.clone()))
        })
        .collect()
}
