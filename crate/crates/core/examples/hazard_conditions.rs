//! Evaluate the model directly: expected log-price, the scaled crash-hazard
//! proxy and the bubble-qualification conditions.
//!
//! ```bash
//! cargo run --example hazard_conditions
//! ```

use lppl_zipf::model::{
    hazard_floor, hazard_proxy, lppl_log_price, qualify, LinearParams, NonlinearParams,
};

fn main() {
    let nl = NonlinearParams { tc: 100.0, m: 0.5, omega: 8.0, phi: 1.0 };

    // the oscillation amplitude decides whether the hazard stays non-negative
    let c_threshold = -(-1.0f64) * nl.m / (nl.m * nl.m + nl.omega * nl.omega).sqrt();
    println!("with B = -1, the hazard proxy stays non-negative up to |C| = {c_threshold:.5}\n");

    for c in [0.0, 0.5 * c_threshold, 1.2 * c_threshold] {
        let lin = LinearParams { gamma: 0.0, a: 7.0, b: -1.0, c };
        let flags = qualify(&nl, &lin);
        println!(
            "C = {c:>8.5}: hazard floor b = {:>8.5}, qualified bubble: {}",
            hazard_floor(&nl, &lin),
            flags.is_bubble()
        );
        println!("    m in (0,1): {}", flags.m_in_range);
        println!("    B < 0:      {}", flags.b_negative);
        println!("    b >= 0:     {}", flags.hazard_nonneg);
        println!("    omega <= 20:{}", flags.omega_ok);
    }

    // price path and hazard acceleration toward the critical time
    let lin = LinearParams { gamma: 0.0, a: 7.0, b: -1.0, c: 0.5 * c_threshold };
    println!("\n   t    tc - t    E[ln p]    hazard proxy");
    for &t in &[20.0, 60.0, 90.0, 98.0, 99.5, 99.99] {
        let lnp = lppl_log_price(t, &nl, &lin, 0.0).unwrap();
        let h = hazard_proxy(t, &nl, &lin).unwrap();
        println!("  {t:>6.2}  {:>7.2}  {lnp:>9.4}  {h:>13.5}", nl.tc - t);
    }
    println!("\nthe proxy diverges as t approaches tc: the crash risk accelerates");
    println!("(absolute hazard is identifiable only up to the crash amplitude)");
}
