//! Nyström discretization of the half-space periodic single-layer operator
//! `S` and Neumann–Poincaré operator `K*` on the particle boundary, the
//! energy (`H*_0`) inner product, and the spectral decomposition of `K*`.
//!
//! Matrices act on node values of a density given per unit arclength.
//! The log singularity of `S` on each component is integrated with Kress
//! product quadrature; `K*` has a continuous kernel on smooth curves and uses
//! the plain trapezoidal rule with the analytic diagonal limit.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::ParticleBoundary;
use crate::green::{self, CellPoint};

/// Kress weights `R_k`, `k = 0..2m−1`, for
/// `∫₀^{2π} log(4 sin²((t−s)/2)) f(s) ds ≈ Σ_j R_{|i−j|} f(t_j)`.
pub fn kress_weights(n: usize) -> Vec<f64> {
    assert!(n % 2 == 0, "Kress quadrature needs an even node count");
    let m = n / 2;
    let mf = m as f64;
    (0..n)
        .map(|k| {
            let mut s = 0.0;
            for l in 1..m {
                s += (l as f64 * k as f64 * PI / mf).cos() / l as f64;
            }
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            -2.0 * PI / mf * s - PI / (mf * mf) * sign
        })
        .collect()
}

/// Smooth part of the single-layer kernel on one component, multiplying
/// `ds` (not `dσ`), after removing `(1/4π) log(4 sin²((t−s)/2))`.
fn single_layer_smooth(
    xi: CellPoint,
    xj: CellPoint,
    ti: f64,
    tj: f64,
    speed_i: f64,
    same: bool,
) -> f64 {
    let image = green::g_periodic_raw(xi.x1 - xj.x1, -xi.x2 - xj.x2);
    if same {
        (speed_i * speed_i).ln() / (4.0 * PI) + green::remainder(CellPoint::new(0.0, 0.0)) - image
    } else {
        let d = xi - xj;
        let s = ((ti - tj) / 2.0).sin();
        let r2 = d.x1 * d.x1 + d.x2 * d.x2;
        (r2 / (4.0 * s * s)).ln() / (4.0 * PI) + green::remainder(d) - image
    }
}

fn par_rows(n: usize, row: impl Fn(usize) -> Vec<f64> + Sync + Send) -> DMatrix<f64> {
    let rows: Vec<Vec<f64>> = (0..n).into_par_iter().map(row).collect();
    DMatrix::from_fn(n, n, |i, j| rows[i][j])
}

/// Nyström matrix of `φ ↦ ∮ G⁺(x, y) φ(y) dσ(y)`.
pub fn assemble_single_layer(boundary: &ParticleBoundary) -> DMatrix<f64> {
    let nodes = boundary.nodes();
    let kress: Vec<Vec<f64>> = (0..boundary.n_components())
        .map(|c| kress_weights(boundary.component_range(c).len()))
        .collect();
    par_rows(boundary.len(), |i| {
        let ni = &nodes[i];
        let ci = ni.component;
        let ri = boundary.component_range(ci);
        let nc = ri.len();
        let h = 2.0 * PI / nc as f64;
        nodes
            .iter()
            .enumerate()
            .map(|(j, nj)| {
                if nj.component != ci {
                    return green::g_halfspace_raw(ni.point, nj.point) * nj.weight;
                }
                let k = (i as isize - j as isize).rem_euclid(nc as isize) as usize;
                let smooth = single_layer_smooth(ni.point, nj.point, ni.param, nj.param, ni.speed, i == j);
                (kress[ci][k] / (4.0 * PI) + h * smooth) * nj.speed
            })
            .collect()
    })
}

/// Nyström matrix of `φ ↦ ∮ ∂G⁺(x, y)/∂ν(x) φ(y) dσ(y)`.
///
/// Diagonal: the free-space limit `κ(x)/(4π)` plus the image term; the
/// periodic remainder has zero gradient at the origin.
pub fn assemble_np(boundary: &ParticleBoundary) -> DMatrix<f64> {
    let nodes = boundary.nodes();
    par_rows(boundary.len(), |i| {
        let ni = &nodes[i];
        let nu = ni.normal;
        nodes
            .iter()
            .enumerate()
            .map(|(j, nj)| {
                let g = if i == j {
                    let img = green::grad_image_raw(ni.point, ni.point);
                    return (ni.curvature / (4.0 * PI) + nu[0] * img[0] + nu[1] * img[1]) * ni.weight;
                } else {
                    green::grad_g_halfspace_raw(ni.point, nj.point)
                };
                (nu[0] * g[0] + nu[1] * g[1]) * nj.weight
            })
            .collect()
    })
}

/// Gram matrix of `(u, v) = −(u, S v)`: `−½(WS + (WS)ᵀ)`.
///
/// Fails with [`Error::UnderResolved`] when it is not positive definite on
/// zero-mean densities.
pub fn h_star_gram(single_layer: &DMatrix<f64>, weights: &[f64]) -> Result<DMatrix<f64>> {
    let n = weights.len();
    let ws = DMatrix::from_fn(n, n, |i, j| weights[i] * single_layer[(i, j)]);
    let gram = (&ws + ws.transpose()) * -0.5;
    let q = zero_mean_basis(weights);
    let g0 = q.transpose() * &gram * &q;
    if g0.clone().cholesky().is_none() {
        let smallest = g0.symmetric_eigenvalues().min();
        return Err(Error::UnderResolved { smallest });
    }
    Ok(gram)
}

/// Smallest eigenvalue of the Gram matrix restricted to zero-mean densities.
pub fn gram_min_eigenvalue(gram: &DMatrix<f64>, weights: &[f64]) -> f64 {
    let q = zero_mean_basis(weights);
    (q.transpose() * gram * &q).symmetric_eigenvalues().min()
}

/// Orthonormal (Euclidean) basis of `{φ : Σ w_j φ_j = 0}`, as columns.
pub fn zero_mean_basis(weights: &[f64]) -> DMatrix<f64> {
    let n = weights.len();
    let norm = weights.iter().map(|w| w * w).sum::<f64>().sqrt();
    let mut u = DVector::from_iterator(n, weights.iter().map(|w| w / norm));
    u[0] += if u[0] >= 0.0 { 1.0 } else { -1.0 };
    let uu = u.dot(&u);
    // Householder reflector; its columns 1.. span the complement of w
    let h = DMatrix::identity(n, n) - (&u * u.transpose()) * (2.0 / uu);
    h.columns(1, n - 1).into_owned()
}

/// `P0 v = v − (Σ w v / Σ w)·1`.
pub fn project_zero_mean<T>(weights: &[f64], v: &mut [T])
where
    T: Copy + std::ops::Mul<f64, Output = T> + std::ops::Sub<Output = T> + std::iter::Sum,
{
    let total: f64 = weights.iter().sum();
    let mean: T = weights.iter().zip(v.iter()).map(|(&w, &x)| x * w).sum::<T>() * (1.0 / total);
    v.iter_mut().for_each(|x| *x = *x - mean);
}

/// Discretized layer operators for one boundary. Immutable after assembly.
#[derive(Debug, Clone)]
pub struct PeriodicOperators {
    pub single_layer: DMatrix<f64>,
    pub np: DMatrix<f64>,
    pub weights: Vec<f64>,
    pub gram: DMatrix<f64>,
}

impl PeriodicOperators {
    pub fn assemble(boundary: &ParticleBoundary) -> Result<Self> {
        let (single_layer, np) = rayon::join(
            || assemble_single_layer(boundary),
            || assemble_np(boundary),
        );
        let weights = boundary.weights();
        let gram = h_star_gram(&single_layer, &weights)?;
        Ok(Self {
            single_layer,
            np,
            weights,
            gram,
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Matrix of the L²-adjoint `K` (double-layer trace), `W⁻¹ (K*)ᵀ W`.
    pub fn np_adjoint(&self) -> DMatrix<f64> {
        let n = self.len();
        let w = &self.weights;
        DMatrix::from_fn(n, n, |i, j| self.np[(j, i)] * w[j] / w[i])
    }

    /// `‖Kᵀ Γ − Γ K‖_F / ‖Γ‖_F`, the discrete Calderón defect `K S − S K*`
    /// measured in the weighted pairing.
    pub fn calderon_residual(&self) -> f64 {
        let r = self.np.transpose() * &self.gram - &self.gram * &self.np;
        r.norm() / self.gram.norm()
    }

    /// `(u, v)_{H*_0}`.
    pub fn h_inner(&self, u: &[f64], v: &[f64]) -> f64 {
        let u = DVector::from_column_slice(u);
        let v = DVector::from_column_slice(v);
        u.dot(&(&self.gram * v))
    }

    /// `K*` restricted to zero-mean densities, in the coordinates of
    /// [`zero_mean_basis`], together with that basis.
    fn restricted(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        let q = zero_mean_basis(&self.weights);
        let mut kq = &self.np * &q;
        for mut col in kq.column_iter_mut() {
            project_zero_mean(&self.weights, col.as_mut_slice());
        }
        (q.transpose() * kq, q)
    }

    /// `L⁻¹ (Γ₀ K₀) L⁻ᵀ` with `Γ₀ = L Lᵀ`; symmetric up to the Calderón
    /// defect. Returned unsymmetrized.
    pub fn whitened_np(&self) -> Result<DMatrix<f64>> {
        Ok(self.whiten()?.0)
    }

    fn whiten(&self) -> Result<(DMatrix<f64>, DMatrix<f64>, DMatrix<f64>)> {
        let (k0, q) = self.restricted();
        let g0 = q.transpose() * &self.gram * &q;
        let chol = g0.clone().cholesky().ok_or_else(|| Error::UnderResolved {
            smallest: g0.symmetric_eigenvalues().min(),
        })?;
        let l = chol.l();
        let gk = &g0 * &k0;
        let y = l
            .solve_lower_triangular(&gk)
            .expect("Cholesky factor is nonsingular");
        let m = l
            .solve_lower_triangular(&y.transpose())
            .expect("Cholesky factor is nonsingular")
            .transpose();
        Ok((m, l, q))
    }

    /// Write `S`, `K*` and the weights as CSV files into `dir`.
    pub fn dump_csv(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        write_matrix(&dir.join("single_layer.csv"), &self.single_layer)?;
        write_matrix(&dir.join("np.csv"), &self.np)?;
        let mut f = std::io::BufWriter::new(std::fs::File::create(dir.join("weights.csv"))?);
        writeln!(f, "index,weight")?;
        for (i, w) in self.weights.iter().enumerate() {
            writeln!(f, "{i},{w:.17e}")?;
        }
        Ok(())
    }
}

fn write_matrix(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    for row in m.row_iter() {
        let line: Vec<String> = row.iter().map(|v| format!("{v:.17e}")).collect();
        writeln!(f, "{}", line.join(","))?;
    }
    Ok(())
}

/// Eigenpairs of `K*` on zero-mean densities, orthonormal in `H*_0`.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    /// Sorted by decreasing magnitude.
    pub eigenvalues: Vec<f64>,
    /// Node-sampled eigen-densities, one per column.
    pub eigenvectors: DMatrix<f64>,
    pub gram: DMatrix<f64>,
    /// `‖M − Mᵀ‖_F / ‖M‖_F` of the whitened operator before symmetrization.
    pub symmetry_defect: f64,
}

impl SpectralDecomposition {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn eigenvector(&self, j: usize) -> Vec<f64> {
        self.eigenvectors.column(j).iter().copied().collect()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(f, "index,eigenvalue")?;
        for (j, l) in self.eigenvalues.iter().enumerate() {
            writeln!(f, "{j},{l:.17e}")?;
        }
        Ok(())
    }
}

/// Symmetric generalized eigensolve: whiten with the Cholesky factor of the
/// restricted Gram matrix, diagonalize, map back.
pub fn eigendecompose(ops: &PeriodicOperators) -> Result<SpectralDecomposition> {
    let (m, l, q) = ops.whiten()?;
    let mt = m.transpose();
    let symmetry_defect = (&m - &mt).norm() / m.norm().max(f64::MIN_POSITIVE);
    let sym = (&m + &mt) * 0.5;
    let eig = sym.symmetric_eigen();
    let coords = l
        .transpose()
        .solve_upper_triangular(&eig.eigenvectors)
        .expect("Cholesky factor is nonsingular");
    let vecs = &q * coords;

    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .abs()
            .total_cmp(&eig.eigenvalues[a].abs())
            .then(a.cmp(&b))
    });
    let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let eigenvectors = DMatrix::from_fn(vecs.nrows(), order.len(), |i, c| vecs[(i, order[c])]);
    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors,
        gram: ops.gram.clone(),
        symmetry_defect,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_disk, make_star};

    fn disk(r: f64, n: usize) -> ParticleBoundary {
        make_disk(CellPoint::new(0.0, 0.5), r, n).unwrap()
    }

    #[test]
    fn kress_weights_integrate_log_kernel() {
        // ∫ log(4 sin²(s/2)) cos(k s) ds = −2π/|k| for k ≠ 0 and 0 for k = 0
        let n = 32;
        let r = kress_weights(n);
        for k in 0..6 {
            let approx: f64 = (0..n)
                .map(|j| r[j] * (k as f64 * 2.0 * PI * j as f64 / n as f64).cos())
                .sum();
            let exact = if k == 0 { 0.0 } else { -2.0 * PI / k as f64 };
            assert!((approx - exact).abs() < 1e-12, "{k}: {approx} vs {exact}");
        }
    }

    #[test]
    fn weighted_single_layer_is_symmetric() {
        let b = disk(0.2, 64);
        let s = assemble_single_layer(&b);
        let w = b.weights();
        let ws = DMatrix::from_fn(64, 64, |i, j| w[i] * s[(i, j)]);
        let asym = (&ws - ws.transpose()).norm() / ws.norm();
        assert!(asym <= 1e-8, "{asym}");
    }

    #[test]
    fn single_layer_entries_converge_under_refinement() {
        // apply to a smooth density and compare at shared nodes
        let f = |t: f64| 1.0 + (2.0 * t).cos() + 0.3 * (3.0 * t).sin();
        let apply = |n: usize| {
            let b = disk(0.2, n);
            let s = assemble_single_layer(&b);
            let phi = DVector::from_iterator(n, b.nodes().iter().map(|x| f(x.param)));
            s * phi
        };
        let coarse = apply(64);
        let fine = apply(128);
        for i in 0..64 {
            assert!((coarse[i] - fine[2 * i]).abs() < 1e-12);
        }
    }

    #[test]
    fn single_layer_on_disk_matches_free_space_for_tiny_particle() {
        // for a tiny disk the periodic and image corrections are nearly constant;
        // the free-space single layer maps cos(k t) to −r cos(k t)/(2k)
        let r = 0.01;
        let b = disk(r, 64);
        let s = assemble_single_layer(&b);
        let phi = DVector::from_iterator(64, b.nodes().iter().map(|x| (3.0 * x.param).cos()));
        let out = s * phi;
        for (i, n) in b.nodes().iter().enumerate() {
            let expect = -r * (3.0 * n.param).cos() / 6.0;
            assert!((out[i] - expect).abs() < 1e-6 * r, "{} {}", out[i], expect);
        }
    }

    #[test]
    fn np_kills_zero_mean_densities_on_tiny_disk() {
        let b = disk(0.01, 64);
        let k = assemble_np(&b);
        let phi = DVector::from_iterator(64, b.nodes().iter().map(|x| (2.0 * x.param).sin()));
        assert!((k * phi).amax() < 1e-3);
    }

    #[test]
    fn np_adjoint_reproduces_half_on_constants() {
        // ∮ ∂G⁺(x,y)/∂ν(x) dσ(x) = ½ for y on the boundary
        for b in [disk(0.2, 128), make_star(CellPoint::new(0.05, 0.45), 0.2, 0.05, 3, 128).unwrap()] {
            let k = assemble_np(&b);
            let w = b.weights();
            for j in 0..b.len() {
                let col: f64 = (0..b.len()).map(|i| w[i] * k[(i, j)]).sum::<f64>() / w[j];
                assert!((col - 0.5).abs() < 1e-10, "{col}");
            }
        }
    }

    #[test]
    fn gram_is_positive_on_zero_mean() {
        let b = disk(0.2, 64);
        let ops = PeriodicOperators::assemble(&b).unwrap();
        assert!(gram_min_eigenvalue(&ops.gram, &ops.weights) > 0.0);
        let nu2 = b.nu2();
        assert!(ops.h_inner(&nu2, &nu2) > 0.0);
        let u: Vec<f64> = b.nodes().iter().map(|n| (n.param).cos() + 0.2).collect();
        let v: Vec<f64> = b.nodes().iter().map(|n| (3.0 * n.param).sin()).collect();
        let (a, c) = (ops.h_inner(&u, &v), ops.h_inner(&v, &u));
        let nu = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((a - c).abs() <= 1e-10 * nu * nv);
    }

    #[test]
    fn zero_mean_basis_is_orthonormal_complement() {
        let w = vec![0.1, 0.3, 0.2, 0.25, 0.15];
        let q = zero_mean_basis(&w);
        let eye = q.transpose() * &q;
        assert!((eye - DMatrix::identity(4, 4)).norm() < 1e-14);
        let wv = DVector::from_column_slice(&w);
        assert!((q.transpose() * wv).norm() < 1e-15);
        let mut v = vec![1.0, 2.0, 3.0, 4.0, 5.0];
        project_zero_mean(&w, &mut v);
        assert!(v.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>().abs() < 1e-15);
    }

    #[test]
    fn disk_spectrum_properties() {
        let b = disk(0.2, 64);
        let ops = PeriodicOperators::assemble(&b).unwrap();
        let spec = eigendecompose(&ops).unwrap();
        assert_eq!(spec.len(), 63);
        assert!(spec.eigenvalues.iter().all(|l| l.abs() < 0.5));
        for w in spec.eigenvalues.windows(2) {
            assert!(w[0].abs() >= w[1].abs());
        }
        let g = spec.eigenvectors.transpose() * &spec.gram * &spec.eigenvectors;
        assert!((g - DMatrix::identity(63, 63)).amax() < 1e-8);
        // each eigenvector is zero-mean and an eigenvector of the raw matrix
        let w = b.weights();
        for j in 0..5 {
            let phi = spec.eigenvector(j);
            let mean: f64 = phi.iter().zip(&w).map(|(a, b)| a * b).sum();
            assert!(mean.abs() < 1e-12);
            let kphi = &ops.np * DVector::from_column_slice(&phi);
            let resid = (kphi - DVector::from_column_slice(&phi) * spec.eigenvalues[j]).norm();
            assert!(resid < 1e-8, "{resid}");
        }
    }

    #[test]
    fn tiny_disk_has_nearly_zero_spectrum() {
        let ops = PeriodicOperators::assemble(&disk(0.01, 64)).unwrap();
        let spec = eigendecompose(&ops).unwrap();
        assert!(spec.eigenvalues[0].abs() <= 0.05);
    }
}
