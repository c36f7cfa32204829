//! Named inputs and series files.

use std::path::Path;

use gft_core::ball::{extremal_fk, extremal_order, ExtremalParams};
use gft_core::series::io::from_text;
use gft_core::{GftError, Result, TruncatedSeries};

/// How long a named input should be.
#[derive(Clone, Copy, Debug)]
pub enum Length {
    /// Exactly this order.
    Exact(usize),
    /// Long enough to evaluate near the unit circle, between `min` and `cap`.
    Boundary { min: usize, cap: usize },
}

/// `koebe`, `identity`, `mobius` (z/(1-z)), `fk:K[,THETA]`, or a path to a
/// series file.
pub fn load(spec: &str, len: Length) -> Result<TruncatedSeries> {
    let order = |fast_decay: Option<f64>| match (len, fast_decay) {
        (Length::Exact(n), _) => n,
        (Length::Boundary { min, cap }, Some(k)) => extremal_order(k, cap).max(min),
        (Length::Boundary { cap, .. }, None) => cap,
    };
    match spec {
        "koebe" => Ok(TruncatedSeries::koebe(order(None))),
        "identity" => Ok(TruncatedSeries::identity(order(Some(0.0)))),
        "mobius" => Ok(TruncatedSeries::geometric(order(None))),
        _ => {
            if let Some(args) = spec.strip_prefix("fk:") {
                let (k, theta) = args.split_once(',').unwrap_or((args, "0"));
                let num = |s: &str| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|e| GftError::Parse(format!("input {spec:?}: {e}")))
                };
                let p = ExtremalParams::with_angle(num(k)?, num(theta)?)?;
                return Ok(extremal_fk(p, order(Some(p.k()))));
            }
            let path = Path::new(spec);
            if !path.exists() {
                return Err(GftError::Usage(format!(
                    "input {spec:?} is neither a named series (koebe, identity, mobius, fk:K[,THETA]) nor a file"
                )));
            }
            let f = from_text(&std::fs::read_to_string(path)?)?;
            match len {
                Length::Exact(n) if n <= f.order() => f.truncate(n),
                // A short file is a polynomial; zero padding is exact.
                Length::Boundary { min, .. } if f.order() < min => Ok(f.resized(min)),
                _ => Ok(f),
            }
        }
    }
}
