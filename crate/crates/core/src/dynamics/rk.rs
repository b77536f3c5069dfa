//! Dormand-Prince 5(4) step for autonomous systems.

const C: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];

/// Fifth-order weights minus fourth-order weights.
const E: [f64; 7] = [
    35.0 / 384.0 - 5179.0 / 57600.0,
    0.0,
    500.0 / 1113.0 - 7571.0 / 16695.0,
    125.0 / 192.0 - 393.0 / 640.0,
    -2187.0 / 6784.0 + 92097.0 / 339200.0,
    11.0 / 84.0 - 187.0 / 2100.0,
    -1.0 / 40.0,
];

#[derive(Clone)]
pub(crate) struct Dopri45 {
    k: [Vec<f64>; 7],
    stage: Vec<f64>,
}

impl Dopri45 {
    pub(crate) fn new(dim: usize) -> Self {
        Self {
            k: std::array::from_fn(|_| vec![0.0; dim]),
            stage: vec![0.0; dim],
        }
    }

    /// One step of size `h` from `y`; writes the fifth-order solution to `out`
    /// and returns the scaled error norm (accept when `<= 1`).
    pub(crate) fn step<F>(
        &mut self,
        field: &F,
        y: &[f64],
        h: f64,
        out: &mut [f64],
        atol: f64,
        rtol: f64,
    ) -> f64
    where
        F: Fn(&[f64], &mut [f64]),
    {
        let dim = y.len();
        field(y, &mut self.k[0]);
        #[allow(clippy::needless_range_loop)]
        for s in 0..6 {
            let row = &C[s];
            for j in 0..dim {
                let mut acc = 0.0;
                for (r, k) in row.iter().zip(&self.k).take(s + 1) {
                    acc += r * k[j];
                }
                self.stage[j] = y[j] + h * acc;
            }
            let (done, rest) = self.k.split_at_mut(s + 1);
            let _ = done;
            field(&self.stage, &mut rest[0]);
        }
        // stage 6 evaluated the fifth-order solution itself
        out.copy_from_slice(&self.stage);
        let mut norm: f64 = 0.0;
        for j in 0..dim {
            let mut err = 0.0;
            for (e, k) in E.iter().zip(&self.k) {
                err += e * k[j];
            }
            let scale = atol + rtol * y[j].abs().max(out[j].abs());
            norm = norm.max((h * err).abs() / scale);
        }
        norm
    }
}
