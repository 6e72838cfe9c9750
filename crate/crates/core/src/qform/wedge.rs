//! Top-degree wedge products by direct expansion.
//!
//! Every factor contributes one `dz^i ∧ dz^j` (`i < j`) from the indices not yet
//! used; the sign is the parity of the resulting index sequence. The cost grows
//! like `(2n)! / 2^n`, fine for `n ≤ 4` and still usable at 5 or 6.

use num_complex::Complex64;

use super::QForm2;
use crate::error::{QmaError, Result};

const MAX_N: usize = 6;

/// Coefficient `c` with `α_1^{p_1} ∧ ⋯ ∧ α_k^{p_k} = c · dz^0 ∧ ⋯ ∧ dz^{2n−1}`.
pub fn wedge_coefficient(factors: &[(&QForm2, usize)]) -> Result<Complex64> {
    let n = match factors.first() {
        Some((f, _)) => f.n(),
        None => return Err(QmaError::Malformed("no wedge factors".into())),
    };
    if factors.iter().any(|(f, _)| f.n() != n) {
        return Err(QmaError::Malformed(
            "wedge factors of different dimension".into(),
        ));
    }
    let total: usize = factors.iter().map(|(_, p)| p).sum();
    if total != n {
        return Err(QmaError::PowerMismatch {
            got: total,
            expected: n,
        });
    }
    if n > MAX_N {
        return Err(QmaError::Dimension {
            n,
            reason: "direct wedge expansion is limited to n <= 6",
        });
    }
    let sequence: Vec<&QForm2> = factors
        .iter()
        .flat_map(|(f, p)| std::iter::repeat(*f).take(*p))
        .collect();
    Ok(expand(&sequence, 0, 0, 2 * n))
}

fn expand(seq: &[&QForm2], used: u32, inversions: u32, dim: usize) -> Complex64 {
    let Some((head, rest)) = seq.split_first() else {
        return if inversions % 2 == 0 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(-1.0, 0.0)
        };
    };
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..dim {
        if used & (1 << i) != 0 {
            continue;
        }
        // placed indices larger than i
        let inv_i = (used >> (i + 1)).count_ones();
        for j in (i + 1)..dim {
            if used & (1 << j) != 0 {
                continue;
            }
            let coeff = head.get(i, j);
            if coeff.re == 0.0 && coeff.im == 0.0 {
                continue;
            }
            let inv_j = (used >> (j + 1)).count_ones();
            let next = used | (1 << i) | (1 << j);
            acc += coeff * expand(rest, next, inversions + inv_i + inv_j, dim);
        }
    }
    acc
}
