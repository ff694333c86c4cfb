//! Correlations and a paired t-test with the p > 0.05 mask.

use xlit::stats::{paired_t_test, pearson, spearman, t_cdf, PairedSample};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let overlap = [0.12, 0.30, 0.25, 0.41, 0.55, 0.62];
    let score = [41.0, 55.0, 50.0, 63.0, 70.0, 71.0];
    let p = pearson(&overlap, &score)?;
    let s = spearman(&overlap, &score)?;
    println!("pearson r={:.4} p={:.3e} masked={}", p.coefficient, p.p_value, p.masked);
    println!("spearman rho={:.4} p={:.3e} masked={}", s.coefficient, s.p_value, s.masked);

    let rom = vec![61.2, 58.4, 70.1, 66.0, 59.9];
    let ortho = vec![55.0, 57.9, 64.3, 60.2, 58.8];
    let t = paired_t_test(&PairedSample::new(rom, ortho))?;
    println!("paired t={:.4} df={} p={:.4}", t.t, t.df, t.p_value);

    println!("t_cdf(1, 1) = {}", t_cdf(1.0, 1.0));
    Ok(())
}
