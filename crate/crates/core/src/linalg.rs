//! Dense complex linear algebra on top of LAPACK/CBLAS (system OpenBLAS).
//!
//! Everything here is deterministic: single-threaded BLAS calls with a fixed
//! algorithmic path (Householder tridiagonalization + divide-and-conquer on
//! the tridiagonal), no randomized pivoting anywhere.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

use crate::{Error, Result};

// Force the openblas-src link directives even though we only call through
// the -sys crates.
extern crate openblas_src as _openblas;

pub const I: C64 = C64::new(0.0, 1.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const ZERO: C64 = C64::new(0.0, 0.0);

pub fn cplx(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// e^{i theta}
pub fn phase(theta: f64) -> C64 {
    C64::new(theta.cos(), theta.sin())
}

/// Largest |entry| of a matrix.
pub fn max_abs(m: &Array2<C64>) -> f64 {
    m.iter().fold(0.0f64, |acc, z| acc.max(z.norm()))
}

/// Largest |a - b| entrywise.
pub fn max_abs_diff(a: &Array2<C64>, b: &Array2<C64>) -> f64 {
    assert_eq!(a.dim(), b.dim(), "shape mismatch in max_abs_diff");
    a.iter()
        .zip(b.iter())
        .fold(0.0f64, |acc, (x, y)| acc.max((x - y).norm()))
}

/// Conjugate transpose.
pub fn adjoint(m: &Array2<C64>) -> Array2<C64> {
    let (r, c) = m.dim();
    Array2::from_shape_fn((c, r), |(i, j)| m[(j, i)].conj())
}

/// deviation from Hermitianity, max |M - M^dagger|
pub fn hermiticity_defect(m: &Array2<C64>) -> f64 {
    let (r, c) = m.dim();
    assert_eq!(r, c);
    let mut worst = 0.0f64;
    for i in 0..r {
        for j in i..c {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

#[derive(Clone, Copy)]
pub enum Op {
    None,
    /// conjugate transpose
    Adj,
}

fn cblas_trans(op: Op) -> cblas_sys::CBLAS_TRANSPOSE {
    match op {
        Op::None => cblas_sys::CBLAS_TRANSPOSE::CblasNoTrans,
        Op::Adj => cblas_sys::CBLAS_TRANSPOSE::CblasConjTrans,
    }
}

/// op_a(A) * op_b(B) through cblas zgemm, row-major.
pub fn mat_mul(op_a: Op, a: &Array2<C64>, op_b: Op, b: &Array2<C64>) -> Array2<C64> {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let (m, k) = match op_a {
        Op::None => (ar, ac),
        Op::Adj => (ac, ar),
    };
    let (kb, n) = match op_b {
        Op::None => (br, bc),
        Op::Adj => (bc, br),
    };
    assert_eq!(k, kb, "inner dimension mismatch in mat_mul");
    let a_s = a.as_standard_layout();
    let b_s = b.as_standard_layout();
    let mut c = Array2::<C64>::zeros((m, n));
    let alpha = ONE;
    let beta = ZERO;
    unsafe {
        cblas_sys::cblas_zgemm(
            cblas_sys::CBLAS_LAYOUT::CblasRowMajor,
            cblas_trans(op_a),
            cblas_trans(op_b),
            m as i32,
            n as i32,
            k as i32,
            &alpha as *const C64 as *const _,
            a_s.as_ptr() as *const _,
            ac as i32,
            b_s.as_ptr() as *const _,
            bc as i32,
            &beta as *const C64 as *const _,
            c.as_mut_ptr() as *mut _,
            n as i32,
        );
    }
    c
}

/// A * B
pub fn mul(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    mat_mul(Op::None, a, Op::None, b)
}

/// A^dagger * B
pub fn adj_mul(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    mat_mul(Op::Adj, a, Op::None, b)
}

/// A * B^dagger
pub fn mul_adj(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    mat_mul(Op::None, a, Op::Adj, b)
}

/// Full Hermitian eigendecomposition, eigenvalues ascending.
///
/// LAPACK zheevd (tridiagonal reduction + divide and conquer). The input is
/// not checked for Hermiticity here; callers do that at the operator layer.
pub fn hermitian_eig(h: &Array2<C64>) -> Result<(Vec<f64>, Array2<C64>)> {
    let (vals, vecs) = zheevd(h, true)?;
    Ok((vals, vecs.expect("vectors requested")))
}

/// Eigenvalues only, ascending.
pub fn hermitian_eigvals(h: &Array2<C64>) -> Result<Vec<f64>> {
    let (vals, _) = zheevd(h, false)?;
    Ok(vals)
}

fn zheevd(h: &Array2<C64>, vectors: bool) -> Result<(Vec<f64>, Option<Array2<C64>>)> {
    let (n, nc) = h.dim();
    if n != nc {
        return Err(Error::Linalg("eig of non-square matrix".into()));
    }
    if n == 0 {
        return Err(Error::Linalg("eig of empty matrix".into()));
    }
    // column-major buffer
    let mut a: Vec<C64> = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            a.push(h[(i, j)]);
        }
    }
    let mut w = vec![0.0f64; n];
    let jobz = if vectors { b'V' } else { b'N' } as std::ffi::c_char;
    let uplo = b'L' as std::ffi::c_char;
    let nn = n as i32;
    let mut info = 0i32;
    unsafe {
        // workspace query
        let (lq, lrq, liq) = (-1i32, -1i32, -1i32);
        let mut wkq = [ZERO];
        let mut rwkq = [0.0f64];
        let mut iwkq = [0i32];
        lapack_sys::zheevd_(
            &jobz,
            &uplo,
            &nn,
            a.as_mut_ptr() as *mut _,
            &nn,
            w.as_mut_ptr(),
            wkq.as_mut_ptr() as *mut _,
            &lq,
            rwkq.as_mut_ptr(),
            &lrq,
            iwkq.as_mut_ptr(),
            &liq,
            &mut info,
        );
        if info != 0 {
            return Err(Error::Linalg(format!("zheevd workspace query failed: info={info}")));
        }
        let lw = wkq[0].re as i32;
        let lrw = rwkq[0] as i32;
        let liw = iwkq[0];
        let mut wk = vec![ZERO; lw.max(1) as usize];
        let mut rwk = vec![0.0f64; lrw.max(1) as usize];
        let mut iwk = vec![0i32; liw.max(1) as usize];
        lapack_sys::zheevd_(
            &jobz,
            &uplo,
            &nn,
            a.as_mut_ptr() as *mut _,
            &nn,
            w.as_mut_ptr(),
            wk.as_mut_ptr() as *mut _,
            &lw,
            rwk.as_mut_ptr(),
            &lrw,
            iwk.as_mut_ptr(),
            &liw,
            &mut info,
        );
        if info != 0 {
            return Err(Error::Linalg(format!("zheevd failed: info={info}")));
        }
    }
    let vecs = if vectors {
        // column k of the factorization is the k-th eigenvector
        let mut v = Array2::<C64>::zeros((n, n));
        for j in 0..n {
            for i in 0..n {
                v[(i, j)] = a[j * n + i];
            }
        }
        Some(v)
    } else {
        None
    };
    Ok((w, vecs))
}

/// V diag(f(lambda)) V^dagger for a precomputed eigensystem.
pub fn spectral_matrix<F>(vals: &[f64], vecs: &Array2<C64>, f: F) -> Array2<C64>
where
    F: Fn(f64) -> C64,
{
    let n = vals.len();
    let mut scaled = vecs.clone();
    for (j, &lam) in vals.iter().enumerate() {
        let fz = f(lam);
        for i in 0..n {
            scaled[(i, j)] *= fz;
        }
    }
    mul_adj(&scaled, vecs)
}

/// Selected columns of V diag(f(lambda)) V^dagger.
///
/// Returns an n x cols.len() block; column c of the result is column
/// cols[c] of the full spectral matrix.
pub fn spectral_columns<F>(vals: &[f64], vecs: &Array2<C64>, f: F, cols: &[usize]) -> Array2<C64>
where
    F: Fn(f64) -> C64,
{
    let n = vals.len();
    let m = cols.len();
    // G[k, c] = f(lambda_k) * conj(V[cols[c], k])
    let mut g = Array2::<C64>::zeros((n, m));
    for k in 0..n {
        let fz = f(vals[k]);
        for (c, &j) in cols.iter().enumerate() {
            g[(k, c)] = fz * vecs[(j, k)].conj();
        }
    }
    mul(vecs, &g)
}

/// Smallest eigenvalue of a Hermitian matrix (eigenvalues only path).
pub fn smallest_eigenvalue(h: &Array2<C64>) -> Result<f64> {
    let vals = hermitian_eigvals(h)?;
    Ok(vals[0])
}

/// Build a diagonal matrix from complex entries.
pub fn diag(entries: &Array1<C64>) -> Array2<C64> {
    let n = entries.len();
    let mut m = Array2::<C64>::zeros((n, n));
    for i in 0..n {
        m[(i, i)] = entries[i];
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn eig_of_diagonal_is_sorted_diagonal() {
        let h = array![
            [cplx(3.0, 0.0), ZERO],
            [ZERO, cplx(-1.0, 0.0)]
        ];
        let (vals, vecs) = hermitian_eig(&h).unwrap();
        assert!((vals[0] + 1.0).abs() < 1e-14);
        assert!((vals[1] - 3.0).abs() < 1e-14);
        // columns are basis vectors up to phase
        assert!((vecs[(1, 0)].norm() - 1.0).abs() < 1e-12);
        assert!((vecs[(0, 1)].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eig_of_sigma_x() {
        let h = array![[ZERO, ONE], [ONE, ZERO]];
        let (vals, _) = hermitian_eig(&h).unwrap();
        assert!((vals[0] + 1.0).abs() < 1e-14);
        assert!((vals[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn eig_reconstruction() {
        // pseudo-random Hermitian, fixed entries
        let n = 24;
        let mut h = Array2::<C64>::zeros((n, n));
        let mut s = 1u64;
        let mut rnd = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        for i in 0..n {
            for j in 0..=i {
                let z = cplx(rnd(), if i == j { 0.0 } else { rnd() });
                h[(i, j)] = z;
                h[(j, i)] = z.conj();
            }
        }
        let (vals, vecs) = hermitian_eig(&h).unwrap();
        let rec = spectral_matrix(&vals, &vecs, |x| cplx(x, 0.0));
        assert!(max_abs_diff(&rec, &h) < 1e-10);
        // orthonormality
        let g = adj_mul(&vecs, &vecs);
        let eye = Array2::<C64>::eye(n);
        assert!(max_abs_diff(&g, &eye) < 1e-12);
        // ascending
        for k in 1..n {
            assert!(vals[k] >= vals[k - 1]);
        }
    }

    #[test]
    fn gemm_adjoint_variants() {
        let a = array![[cplx(1.0, 2.0), cplx(0.0, 1.0)], [cplx(2.0, -1.0), ONE]];
        let b = array![[ONE, cplx(1.0, 1.0)], [cplx(0.0, -2.0), ZERO]];
        let ab = mul(&a, &b);
        let mut expect = Array2::<C64>::zeros((2, 2));
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    expect[(i, j)] += a[(i, k)] * b[(k, j)];
                }
            }
        }
        assert!(max_abs_diff(&ab, &expect) < 1e-14);
        let adj_b = adjoint(&b);
        assert!(max_abs_diff(&mul_adj(&a, &b), &mul(&a, &adj_b)) < 1e-14);
        let adj_a = adjoint(&a);
        assert!(max_abs_diff(&adj_mul(&a, &b), &mul(&adj_a, &b)) < 1e-14);
    }

    #[test]
    fn spectral_columns_match_full() {
        let h = array![
            [cplx(1.0, 0.0), cplx(0.5, 0.25), ZERO],
            [cplx(0.5, -0.25), cplx(-0.5, 0.0), ONE],
            [ZERO, ONE, cplx(2.0, 0.0)]
        ];
        let (vals, vecs) = hermitian_eig(&h).unwrap();
        let f = |x: f64| phase(0.7 * x);
        let full = spectral_matrix(&vals, &vecs, f);
        let cols = spectral_columns(&vals, &vecs, f, &[0, 2]);
        for i in 0..3 {
            assert!((cols[(i, 0)] - full[(i, 0)]).norm() < 1e-12);
            assert!((cols[(i, 1)] - full[(i, 2)]).norm() < 1e-12);
        }
    }
}
