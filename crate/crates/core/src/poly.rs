//! Piecewise-polynomial messages on [0, 1].
//!
//! The latent-chain models integrate out their shared uniform variables one
//! at a time. Each elimination maps a piecewise-polynomial sub-density of the
//! current latent into one of the next, raising the degree by at most one and
//! adding at most two breakpoints, so the whole chain is integrated exactly
//! in double precision (no quadrature grid anywhere).
//!
//! Pieces keep their coefficients in the local coordinate `s = u - lo`; that
//! keeps all composition shifts below one in magnitude, which is what holds
//! the binomial-expansion roundoff near machine epsilon.

const BREAK_EPS: f64 = 1e-13;

#[derive(Debug, Clone)]
pub(crate) struct Piece {
    pub lo: f64,
    pub hi: f64,
    /// Coefficients of the polynomial in `s = u - lo`.
    pub coeffs: Vec<f64>,
}

impl Piece {
    #[cfg(test)]
    fn eval_local(&self, s: f64) -> f64 {
        let mut acc = 0.0;
        for &c in self.coeffs.iter().rev() {
            acc = acc * s + c;
        }
        acc
    }

    /// Coefficients of the antiderivative `A(s) = ∫_0^s poly`, so `A(0) = 0`.
    fn antiderivative(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.coeffs.len() + 1);
        out.push(0.0);
        for (k, &c) in self.coeffs.iter().enumerate() {
            out.push(c / (k as f64 + 1.0));
        }
        out
    }

    fn integral(&self) -> f64 {
        let len = self.hi - self.lo;
        let anti = self.antiderivative();
        let mut acc = 0.0;
        for &c in anti.iter().rev() {
            acc = acc * len + c;
        }
        acc
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Message {
    pub pieces: Vec<Piece>,
}

/// Evaluate `Σ_k a_k (c0 - s)^k` as coefficients in `s`.
fn compose_shifted_negated(a: &[f64], c0: f64) -> Vec<f64> {
    let deg = a.len();
    let mut out = vec![0.0; deg];
    for (k, &ak) in a.iter().enumerate() {
        if ak == 0.0 {
            continue;
        }
        // C(k, j) * c0^{k-j} * (-1)^j, built up multiplicatively.
        let mut binom = 1.0f64;
        let mut c0_pow = c0.powi(k as i32);
        for (j, slot) in out.iter_mut().enumerate().take(k + 1) {
            *slot += ak * binom * c0_pow * if j % 2 == 0 { 1.0 } else { -1.0 };
            if j < k {
                binom *= (k - j) as f64 / (j as f64 + 1.0);
                c0_pow = if c0 != 0.0 { c0_pow / c0 } else { 0.0 };
            }
        }
    }
    out
}

impl Message {
    /// The constant-one density on [0, 1].
    pub fn unit() -> Self {
        Self { pieces: vec![Piece { lo: 0.0, hi: 1.0, coeffs: vec![1.0] }] }
    }

    pub fn total(&self) -> f64 {
        self.pieces.iter().map(Piece::integral).sum()
    }

    /// Integrate the current latent against the threshold constraint
    /// `1{v + w > t}` (or its complement), producing the message of the next
    /// latent `w`:
    ///
    /// `m'(w) = theta * ∫ m(v) 1{v + w >/<= t} dv + mix_const`
    ///
    /// `mix_const` carries the remaining mixture mass (already multiplied by
    /// the current total), which is constant in `w`.
    pub fn constrain(&self, t: f64, keep_above: bool, theta: f64, mix_const: f64) -> Message {
        // Cumulative integral F at piece starts, antiderivatives per piece.
        let antis: Vec<Vec<f64>> = self.pieces.iter().map(Piece::antiderivative).collect();
        let mut f_cum = Vec::with_capacity(self.pieces.len() + 1);
        let mut acc = 0.0;
        for piece in &self.pieces {
            f_cum.push(acc);
            acc += piece.integral();
        }
        let total = acc;

        // Candidate breakpoints in w: clamp boundaries plus images of the
        // existing piece boundaries under w = t - v.
        let mut brks = vec![0.0, 1.0, t - 1.0, t];
        for piece in &self.pieces {
            brks.push(t - piece.lo);
            brks.push(t - piece.hi);
        }
        brks.retain(|w| w.is_finite());
        brks.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut cuts = vec![0.0f64];
        for &w in &brks {
            if w > BREAK_EPS && w < 1.0 - BREAK_EPS && w - cuts.last().unwrap() > BREAK_EPS {
                cuts.push(w);
            }
        }
        cuts.push(1.0);

        let mut pieces = Vec::with_capacity(cuts.len() - 1);
        for pair in cuts.windows(2) {
            let (w0, w1) = (pair[0], pair[1]);
            if w1 - w0 <= BREAK_EPS {
                continue;
            }
            let x_mid = t - 0.5 * (w0 + w1);
            // F(clamp(t - w, 0, 1)) as a polynomial in s = w - w0.
            let f_part: Vec<f64> = if x_mid <= 0.0 {
                vec![0.0]
            } else if x_mid >= 1.0 {
                vec![total]
            } else {
                let idx = self
                    .pieces
                    .iter()
                    .position(|p| x_mid <= p.hi)
                    .unwrap_or(self.pieces.len() - 1);
                let c0 = t - self.pieces[idx].lo - w0;
                let mut composed = compose_shifted_negated(&antis[idx], c0);
                composed[0] += f_cum[idx];
                composed
            };
            let mut coeffs: Vec<f64> = if keep_above {
                let mut v: Vec<f64> = f_part.iter().map(|c| -c).collect();
                v[0] += total;
                v
            } else {
                f_part
            };
            for c in &mut coeffs {
                *c *= theta;
            }
            coeffs[0] += mix_const;
            while coeffs.len() > 1 && coeffs.last() == Some(&0.0) {
                coeffs.pop();
            }
            pieces.push(Piece { lo: w0, hi: w1, coeffs });
        }
        Message { pieces }
    }

    #[cfg(test)]
    fn eval(&self, u: f64) -> f64 {
        for p in &self.pieces {
            if u <= p.hi + BREAK_EPS && u >= p.lo - BREAK_EPS {
                return p.eval_local(u - p.lo);
            }
        }
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn unit_total_is_one() {
        assert_relative_eq!(Message::unit().total(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn one_constraint_reproduces_triangle_law() {
        // P(U1 + U2 > t) = 1 - t^2/2 for t in [0, 1].
        for &t in &[0.25, 0.5, 0.9] {
            let m = Message::unit().constrain(t, true, 1.0, 0.0);
            assert_relative_eq!(m.total(), 1.0 - t * t / 2.0, epsilon = 1e-13);
        }
        // P(U1 + U2 > t) = (2 - t)^2 / 2 for t in [1, 2].
        for &t in &[1.1, 1.5, 1.9] {
            let m = Message::unit().constrain(t, true, 1.0, 0.0);
            assert_relative_eq!(m.total(), (2.0 - t) * (2.0 - t) / 2.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn complement_constraint_is_mass_preserving() {
        for &t in &[0.3, 0.8, 1.2, 1.7] {
            let above = Message::unit().constrain(t, true, 1.0, 0.0);
            let below = Message::unit().constrain(t, false, 1.0, 0.0);
            assert_relative_eq!(above.total() + below.total(), 1.0, epsilon = 1e-13);
            for &u in &[0.05, 0.33, 0.71, 0.98] {
                assert_relative_eq!(above.eval(u) + below.eval(u), 1.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn two_step_chain_closed_form() {
        // P(U1+U2 > 1, U2+U3 > 1) = ∫ v^2 dv = 1/3.
        let m1 = Message::unit().constrain(1.0, true, 1.0, 0.0);
        let m2 = m1.constrain(1.0, true, 1.0, 0.0);
        assert_relative_eq!(m2.total(), 1.0 / 3.0, epsilon = 1e-13);
    }

    #[test]
    fn mixture_constant_adds_independent_mass() {
        // theta = 0 turns the constraint into a pure product with the mix
        // weight: m'(w) = c * total.
        let m = Message::unit().constrain(0.7, true, 0.0, 0.37);
        assert_relative_eq!(m.total(), 0.37, epsilon = 1e-14);
    }

    #[test]
    fn deep_chain_conserves_mass() {
        // Summing over both branches at each step must telescope to one.
        fn mass(depth: usize, msg: &Message, ts: &[f64]) -> f64 {
            if depth == ts.len() {
                return msg.total();
            }
            let t = ts[depth];
            let tot = msg.total();
            let up = msg.constrain(t, true, 0.8, 0.2 * 0.4 * tot);
            let down = msg.constrain(t, false, 0.8, 0.2 * 0.6 * tot);
            mass(depth + 1, &up, ts) + mass(depth + 1, &down, ts)
        }
        let ts = [1.3, 0.7, 1.66, 1.05, 0.4, 1.9, 1.21, 0.95];
        let total = mass(0, &Message::unit(), &ts);
        assert_relative_eq!(total, 1.0, epsilon = 1e-11);
    }
}
