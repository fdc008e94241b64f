//! Classical RK4 along piecewise-linear paths in u-space.
//!
//! The state is a stack of matrices. On a segment u(t) = a + t(b − a), t ∈ [0, 1],
//! the right-hand side sees the γ-matrix at u(t) and the displacement Δ = b − a.

use crate::de::Point;
use crate::error::Result;
use crate::linalg::{CMat, C64};

pub(crate) fn rk4_polyline<G, F, P>(
    waypoints: &[Point],
    steps_per_segment: usize,
    mut state: Vec<CMat>,
    mut gamma_at: G,
    deriv: F,
    mut post_step: P,
) -> Result<Vec<CMat>>
where
    G: FnMut(&Point) -> Result<CMat>,
    F: Fn(&CMat, &[C64], &[CMat]) -> Vec<CMat>,
    P: FnMut(usize, &mut Vec<CMat>) -> Result<()>,
{
    let steps = steps_per_segment.max(1);
    let mut step_count = 0usize;
    for seg in waypoints.windows(2) {
        let (a, b) = (&seg[0], &seg[1]);
        let delta: Vec<C64> = b.0.iter().zip(&a.0).map(|(y, x)| y - x).collect();
        if delta.iter().all(|d| d.norm() == 0.0) {
            continue;
        }
        let h = 1.0 / steps as f64;
        let at = |t: f64| a.lerp(b, t);
        let mut g_start = gamma_at(&at(0.0))?;
        for s in 0..steps {
            let t0 = s as f64 * h;
            let g_mid = gamma_at(&at(t0 + 0.5 * h))?;
            let g_end = gamma_at(&at(t0 + h))?;

            let k1 = deriv(&g_start, &delta, &state);
            let y2 = axpy(&state, &k1, 0.5 * h);
            let k2 = deriv(&g_mid, &delta, &y2);
            let y3 = axpy(&state, &k2, 0.5 * h);
            let k3 = deriv(&g_mid, &delta, &y3);
            let y4 = axpy(&state, &k3, h);
            let k4 = deriv(&g_end, &delta, &y4);

            for (i, y) in state.iter_mut().enumerate() {
                *y += (&k1[i] + &k2[i] * C64::new(2.0, 0.0) + &k3[i] * C64::new(2.0, 0.0) + &k4[i])
                    * C64::new(h / 6.0, 0.0);
            }
            step_count += 1;
            post_step(step_count, &mut state)?;
            g_start = g_end;
        }
    }
    Ok(state)
}

fn axpy(y: &[CMat], k: &[CMat], a: f64) -> Vec<CMat> {
    y.iter().zip(k).map(|(y, k)| y + k * C64::new(a, 0.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{identity, re};

    #[test]
    fn exponential_growth_is_fourth_order() {
        // y' = Δ·y on a 1x1 state, exact solution e^{Δ}
        let a = Point::real(&[0.0]);
        let b = Point::real(&[1.0]);
        let solve = |steps| {
            let out = rk4_polyline(
                &[a.clone(), b.clone()],
                steps,
                vec![identity(1)],
                |_| Ok(CMat::zeros(1, 1)),
                |_, d, y| vec![&y[0] * d[0]],
                |_, _| Ok(()),
            )
            .unwrap();
            (out[0][(0, 0)] - re(1f64.exp())).norm()
        };
        let (e1, e2) = (solve(10), solve(20));
        let ratio = e1 / e2;
        assert!(ratio > 14.0 && ratio < 18.0, "ratio {ratio}");
    }
}
