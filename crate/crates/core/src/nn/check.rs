use rand::Rng;

pub const DEFAULT_CHECK_STEP: f64 = 1e-5;
pub const DEFAULT_CHECK_COORDS: usize = 200;

/// Gradient magnitudes below this are compared in absolute terms.
const REL_FLOOR: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Coordinate with the largest error.
    pub worst: usize,
    pub checked: usize,
}

/// Central-difference check of `analytic` against `loss` at `params`.
///
/// Every coordinate is checked when there are at most `coords` of them;
/// otherwise `coords` coordinates are drawn at random. The relative error of
/// a coordinate is `|a − n| / max(|a|, |n|, 1e-6)`. `params` is restored
/// before returning.
pub fn grad_check(
    params: &mut [f64],
    analytic: &[f64],
    h: f64,
    coords: usize,
    rng: &mut impl Rng,
    mut loss: impl FnMut(&[f64]) -> f64,
) -> GradCheckReport {
    assert_eq!(params.len(), analytic.len(), "gradient length mismatch");
    let total = params.len();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst: 0,
        checked: 0,
    };
    let exhaustive = total <= coords;
    let count = if exhaustive { total } else { coords };
    for c in 0..count {
        let i = if exhaustive {
            c
        } else {
            rng.random_range(0..total)
        };
        let orig = params[i];
        params[i] = orig + h;
        let up = loss(params);
        params[i] = orig - h;
        let down = loss(params);
        params[i] = orig;
        let numeric = (up - down) / (2.0 * h);
        let a = analytic[i];
        let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(REL_FLOOR);
        if report.checked == 0 || err > report.max_rel_error {
            report.max_rel_error = err;
            report.worst = i;
        }
        report.checked += 1;
    }
    report
}
