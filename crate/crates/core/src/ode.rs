//! Dormand–Prince 5(4) with Hairer's continuous extension.

/// One accepted step together with its dense-output polynomial.
#[derive(Clone, Debug)]
pub struct Segment {
    pub t0: f64,
    pub h: f64,
    rc: [Vec<f64>; 5],
}

impl Segment {
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    /// Interpolated state at `t ∈ [t0, t0 + h]` (fourth-order accurate).
    pub fn eval(&self, t: f64) -> Vec<f64> {
        let s = (t - self.t0) / self.h;
        let s1 = 1.0 - s;
        (0..self.rc[0].len())
            .map(|i| {
                let r = |k: usize| self.rc[k][i];
                r(0) + s * (r(1) + s1 * (r(2) + s * (r(3) + s1 * r(4))))
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Smallest admissible step relative to `max(|t|, 1)`.
    pub h_min_rel: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-12, h_min_rel: 1e-14, max_steps: 2_000_000 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OdeEnd {
    Reached,
    Stopped,
    StepUnderflow,
    MaxSteps,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

fn lin(y: &[f64], h: f64, terms: &[(f64, &[f64])]) -> Vec<f64> {
    let mut out = y.to_vec();
    for (c, k) in terms {
        if *c != 0.0 {
            for (o, v) in out.iter_mut().zip(k.iter()) {
                *o += h * c * v;
            }
        }
    }
    out
}

/// Integrates `y' = f(t, y)` from `t0` to `t_end`, handing every accepted
/// step to `observer`, which may stop the integration.
pub fn dp45<F, O>(mut f: F, t0: f64, y0: &[f64], t_end: f64, opts: &OdeOptions, mut observer: O) -> OdeEnd
where
    F: FnMut(f64, &[f64], &mut [f64]),
    O: FnMut(&Segment, &[f64]) -> Control,
{
    let n = y0.len();
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k1 = vec![0.0; n];
    f(t, &y, &mut k1);
    let scale = |y: &[f64], i: usize| opts.atol + opts.rtol * y[i].abs();

    // initial step from the size of y and f
    let d0 = (y.iter().enumerate().map(|(i, v)| (v / scale(&y, i)).powi(2)).sum::<f64>() / n as f64).sqrt();
    let d1 = (k1.iter().enumerate().map(|(i, v)| (v / scale(&y, i)).powi(2)).sum::<f64>() / n as f64).sqrt();
    let mut h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h = h.min(t_end - t0);

    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut k5 = vec![0.0; n];
    let mut k6 = vec![0.0; n];
    let mut k7 = vec![0.0; n];
    let mut steps = 0;

    while t < t_end {
        if steps >= opts.max_steps {
            return OdeEnd::MaxSteps;
        }
        let h_min = opts.h_min_rel * t.abs().max(1.0);
        if h < h_min {
            return OdeEnd::StepUnderflow;
        }
        let last = t + h >= t_end;
        if last {
            h = t_end - t;
        }
        f(t + C2 * h, &lin(&y, h, &[(A21, &k1)]), &mut k2);
        f(t + C3 * h, &lin(&y, h, &[(A31, &k1), (A32, &k2)]), &mut k3);
        f(t + C4 * h, &lin(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]), &mut k4);
        f(t + C5 * h, &lin(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]), &mut k5);
        let y6 = lin(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]);
        f(t + h, &y6, &mut k6);
        let y1 = lin(&y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        f(t + h, &y1, &mut k7);

        let mut err = 0.0;
        let mut finite = true;
        for i in 0..n {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = opts.atol + opts.rtol * y[i].abs().max(y1[i].abs());
            err += (e / sc).powi(2);
            finite &= y1[i].is_finite();
        }
        let err = (err / n as f64).sqrt();
        if !finite || !err.is_finite() {
            h *= 0.2;
            continue;
        }
        if err <= 1.0 {
            let mut rc: [Vec<f64>; 5] = Default::default();
            rc[0] = y.clone();
            rc[1] = y1.iter().zip(&y).map(|(a, b)| a - b).collect();
            rc[2] = (0..n).map(|i| h * k1[i] - rc[1][i]).collect();
            rc[3] = (0..n).map(|i| rc[1][i] - h * k7[i] - rc[2][i]).collect();
            rc[4] = (0..n)
                .map(|i| h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]))
                .collect();
            let seg = Segment { t0: t, h, rc };
            t = if last { t_end } else { t + h };
            y = y1;
            std::mem::swap(&mut k1, &mut k7);
            steps += 1;
            if observer(&seg, &y) == Control::Stop {
                return OdeEnd::Stopped;
            }
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h *= fac;
        } else {
            h *= (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
        }
    }
    OdeEnd::Reached
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_and_dense_output() {
        let mut segs = Vec::new();
        let end = dp45(
            |_, y, dy| dy[0] = -y[0],
            0.0,
            &[1.0],
            3.0,
            &OdeOptions { rtol: 1e-11, atol: 1e-14, ..Default::default() },
            |s, _| {
                segs.push(s.clone());
                Control::Continue
            },
        );
        assert_eq!(end, OdeEnd::Reached);
        let last = segs.last().unwrap();
        assert!((last.eval(last.t1())[0] - (-3.0f64).exp()).abs() < 1e-10);
        for s in &segs {
            let tm = s.t0 + 0.37 * s.h;
            assert!((s.eval(tm)[0] - (-tm).exp()).abs() < 1e-9);
        }
    }

    #[test]
    fn harmonic_oscillator_energy() {
        let mut y_end = vec![];
        dp45(
            |_, y, dy| {
                dy[0] = y[1];
                dy[1] = -y[0];
            },
            0.0,
            &[1.0, 0.0],
            20.0,
            &OdeOptions::default(),
            |_, y| {
                y_end = y.to_vec();
                Control::Continue
            },
        );
        assert!((y_end[0] - 20f64.cos()).abs() < 1e-8);
        assert!((y_end[1] + 20f64.sin()).abs() < 1e-8);
    }

    #[test]
    fn riccati_pole_underflows_or_stops() {
        // y' = y², y(0) = 1 has a pole at t = 1
        let mut t_last = 0.0;
        let end = dp45(
            |_, y, dy| dy[0] = y[0] * y[0],
            0.0,
            &[1.0],
            2.0,
            &OdeOptions::default(),
            |s, y| {
                t_last = s.t1();
                if y[0] > 1e8 {
                    Control::Stop
                } else {
                    Control::Continue
                }
            },
        );
        assert_eq!(end, OdeEnd::Stopped);
        assert!((t_last - 1.0).abs() < 1e-7);
    }
}
