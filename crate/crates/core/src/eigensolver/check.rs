use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::form::CellForm;

/// Largest discrepancy between the analytic gradients of the energy, mass
/// and potential sums and central differences with step `1e−6·max|u|`,
/// over up to 50 randomly chosen coordinates. Errors are measured relative
/// to the largest gradient entry of the respective sum.
pub fn gradient_check(form: &CellForm, field: &[f64], p: f64, eps: f64, seed: u64) -> f64 {
    let n = form.n_free();
    let g = form.gradient(field, p, eps);
    let scale = field.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
    let h = 1e-6 * scale;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks = sample(&mut rng, n, n.min(50));
    let norms = [
        g.energy.iter().fold(0.0f64, |a, v| a.max(v.abs())),
        g.mass.iter().fold(0.0f64, |a, v| a.max(v.abs())),
        g.potential.iter().fold(0.0f64, |a, v| a.max(v.abs())),
    ];
    let mut worst = 0.0f64;
    let mut probe = field.to_vec();
    for i in picks.iter() {
        probe[i] = field[i] + h;
        let plus = form.evaluate(&probe, p, eps);
        probe[i] = field[i] - h;
        let minus = form.evaluate(&probe, p, eps);
        probe[i] = field[i];
        let fd = [
            (plus.energy - minus.energy) / (2.0 * h),
            (plus.mass - minus.mass) / (2.0 * h),
            (plus.potential - minus.potential) / (2.0 * h),
        ];
        let an = [g.energy[i], g.mass[i], g.potential[i]];
        for j in 0..3 {
            let diff = (fd[j] - an[j]).abs();
            if diff == 0.0 {
                continue;
            }
            worst = worst.max(diff / norms[j].max(f64::MIN_POSITIVE));
        }
    }
    worst
}
