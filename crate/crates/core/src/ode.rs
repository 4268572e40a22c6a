//! Embedded Dormand–Prince 5(4) step for two-component radial systems.

pub(crate) type State = [f64; 2];

/// One DP5(4) step from `(x, y)` with step `h`. Returns the fifth-order
/// solution, the embedded error estimate, and the derivative at the end
/// point (FSAL).
pub(crate) fn dp45_step(
    f: &dyn Fn(f64, &State) -> State,
    x: f64,
    y: &State,
    k1: &State,
    h: f64,
) -> (State, State, State) {
    let add = |y: &State, coeffs: &[(f64, &State)]| -> State {
        let mut out = *y;
        for (c, k) in coeffs {
            out[0] += h * c * k[0];
            out[1] += h * c * k[1];
        }
        out
    };

    let k2 = f(x + h / 5.0, &add(y, &[(1.0 / 5.0, k1)]));
    let k3 = f(
        x + 3.0 * h / 10.0,
        &add(y, &[(3.0 / 40.0, k1), (9.0 / 40.0, &k2)]),
    );
    let k4 = f(
        x + 4.0 * h / 5.0,
        &add(
            y,
            &[(44.0 / 45.0, k1), (-56.0 / 15.0, &k2), (32.0 / 9.0, &k3)],
        ),
    );
    let k5 = f(
        x + 8.0 * h / 9.0,
        &add(
            y,
            &[
                (19372.0 / 6561.0, k1),
                (-25360.0 / 2187.0, &k2),
                (64448.0 / 6561.0, &k3),
                (-212.0 / 729.0, &k4),
            ],
        ),
    );
    let k6 = f(
        x + h,
        &add(
            y,
            &[
                (9017.0 / 3168.0, k1),
                (-355.0 / 33.0, &k2),
                (46732.0 / 5247.0, &k3),
                (49.0 / 176.0, &k4),
                (-5103.0 / 18656.0, &k5),
            ],
        ),
    );
    let y5 = add(
        y,
        &[
            (35.0 / 384.0, k1),
            (500.0 / 1113.0, &k3),
            (125.0 / 192.0, &k4),
            (-2187.0 / 6784.0, &k5),
            (11.0 / 84.0, &k6),
        ],
    );
    let k7 = f(x + h, &y5);
    // Fourth-order embedded solution for the error estimate.
    let y4 = add(
        y,
        &[
            (5179.0 / 57600.0, k1),
            (7571.0 / 16695.0, &k3),
            (393.0 / 640.0, &k4),
            (-92097.0 / 339200.0, &k5),
            (187.0 / 2100.0, &k6),
            (1.0 / 40.0, &k7),
        ],
    );
    let err = [y5[0] - y4[0], y5[1] - y4[1]];
    (y5, err, k7)
}

/// Scaled max-norm of the embedded error; a value ≤ 1 accepts the step.
pub(crate) fn error_norm(err: &State, y: &State, y_new: &State, atol: f64, rtol: f64) -> f64 {
    let mut norm = 0.0f64;
    for i in 0..2 {
        let scale = atol + rtol * y[i].abs().max(y_new[i].abs());
        norm = norm.max((err[i] / scale).abs());
    }
    norm
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_harmonic_oscillator_to_fifth_order_accuracy() {
        // y'' = -y from (1, 0): y = cos x.
        let rhs = |_x: f64, y: &State| -> State { [y[1], -y[0]] };
        let mut x = 0.0;
        let mut y: State = [1.0, 0.0];
        let mut k1 = rhs(x, &y);
        let h = 1e-2;
        while x < 1.0 - 1e-12 {
            let (y5, _err, k7) = dp45_step(&rhs, x, &y, &k1, h);
            y = y5;
            k1 = k7;
            x += h;
        }
        assert!((y[0] - 1f64.cos()).abs() < 1e-11);
        assert!((y[1] + 1f64.sin()).abs() < 1e-11);
    }

    #[test]
    fn error_estimate_tracks_true_error() {
        let rhs = |x: f64, _y: &State| -> State { [(2.0 * x).exp(), 0.0] };
        let y: State = [0.0, 0.0];
        let k1 = rhs(0.0, &y);
        let (y5, err, _) = dp45_step(&rhs, 0.0, &y, &k1, 0.1);
        let exact = (0.2f64.exp() - 1.0) / 2.0;
        let true_err = (y5[0] - exact).abs();
        assert!(err[0].abs() < 1e-8);
        assert!(true_err < 1e-10);
    }
}
