/// Number of monomials in a quintic piece.
pub const BASIS_LEN: usize = 6;

/// Highest derivative order with a non-zero quintic basis.
pub const MAX_ORDER: usize = 5;

/// Derivative of order `order` of the monomial basis `[1, t, t², t³, t⁴, t⁵]` at `t`.
///
/// Orders above five return the zero vector.
pub fn eval_basis(t: f64, order: usize) -> [f64; BASIS_LEN] {
    let mut out = [0.0; BASIS_LEN];
    if order > MAX_ORDER {
        return out;
    }
    let mut tp = 1.0;
    for j in order..BASIS_LEN {
        // j! / (j - order)!
        let mut factor = 1.0;
        for m in (j - order + 1)..=j {
            factor *= m as f64;
        }
        out[j] = factor * tp;
        tp *= t;
    }
    out
}
