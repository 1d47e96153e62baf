//! The connecting rescaling between two normalizations has a limiting slope.

use essrate::analysis::RescalingPair;
use essrate::prelude::*;

fn main() {
    let pairs = [
        ("t -> 2(t - ln(1+t))", RescalingPair::new(Rescaling::Identity, Rescaling::log_slip(2.0))),
        ("t/10 -> t/5", RescalingPair::new(Rescaling::linear(0.1), Rescaling::linear(0.2))),
        ("t -> t^2", RescalingPair::new(Rescaling::Identity, Rescaling::power(2.0, 1.0))),
        ("t^2 -> t", RescalingPair::new(Rescaling::power(2.0, 1.0), Rescaling::Identity)),
    ];
    for (label, pair) in pairs {
        let rates: Vec<String> = [1e1, 1e3, 1e6]
            .iter()
            .map(|t| format!("{:.6}", pair.connecting_rate(*t)))
            .collect();
        println!(
            "{label:<22} slope at 1e1, 1e3, 1e6: {}  limit {}",
            rates.join(", "),
            rescaling_slope_limit(&pair, 1e6)
        );
    }
}
