//! One-dimensional P1 finite elements: meshes, nodal fields, the lumped
//! semi-inner product, interpolation, gradients and stiffness assembly.

use std::sync::Arc;

use crate::banded::BandedMatrix;
use crate::error::{Error, Result};

/// Relative tolerance used when deciding whether a mesh is uniform.
const UNIFORM_RTOL: f64 = 1e-9;

/// A partition `x_0 < x_1 < ... < x_M` of an interval.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    nodes: Vec<f64>,
    sizes: Vec<f64>,
    weights: Vec<f64>,
}

impl Mesh {
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::InvalidMesh(format!(
                "need at least 2 nodes, got {}",
                nodes.len()
            )));
        }
        if let Some((index, &value)) = nodes.iter().enumerate().find(|(_, x)| !x.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        let sizes: Vec<f64> = nodes.windows(2).map(|w| w[1] - w[0]).collect();
        if let Some(j) = sizes.iter().position(|&h| h <= 0.0) {
            return Err(Error::InvalidMesh(format!(
                "nodes not strictly increasing at index {}",
                j + 1
            )));
        }
        let mut weights = vec![0.0; nodes.len()];
        for (j, &h) in sizes.iter().enumerate() {
            weights[j] += 0.5 * h;
            weights[j + 1] += 0.5 * h;
        }
        Ok(Self {
            nodes,
            sizes,
            weights,
        })
    }

    /// Uniform mesh of `node_count` nodes on `[left, right]`.
    pub fn uniform(left: f64, right: f64, node_count: usize) -> Result<Self> {
        if node_count < 2 {
            return Err(Error::InvalidMesh(format!(
                "need at least 2 nodes, got {node_count}"
            )));
        }
        if !(left.is_finite() && right.is_finite() && left < right) {
            return Err(Error::InvalidMesh(format!(
                "invalid interval [{left}, {right}]"
            )));
        }
        let elements = (node_count - 1) as f64;
        let span = right - left;
        let nodes = (0..node_count)
            .map(|i| {
                if i == node_count - 1 {
                    right
                } else {
                    left + span * (i as f64) / elements
                }
            })
            .collect();
        Self::from_nodes(nodes)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn element_count(&self) -> usize {
        self.sizes.len()
    }

    pub fn element_sizes(&self) -> &[f64] {
        &self.sizes
    }

    /// Lumped mass weights: half the sum of the adjacent element sizes.
    pub fn lumped_weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn left(&self) -> f64 {
        self.nodes[0]
    }

    pub fn right(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    pub fn midpoint(&self, element: usize) -> f64 {
        0.5 * (self.nodes[element] + self.nodes[element + 1])
    }

    /// `max h_j / min h_j`.
    pub fn quasi_uniformity(&self) -> f64 {
        let (lo, hi) = self
            .sizes
            .iter()
            .fold((f64::INFINITY, 0.0_f64), |(lo, hi), &h| (lo.min(h), hi.max(h)));
        hi / lo
    }

    /// The common element size if the mesh is uniform.
    pub fn uniform_spacing(&self) -> Result<f64> {
        let ratio = self.quasi_uniformity();
        if ratio - 1.0 > UNIFORM_RTOL {
            return Err(Error::NonUniformMesh { ratio });
        }
        Ok((self.right() - self.left()) / self.element_count() as f64)
    }
}

/// Coefficients of a continuous piecewise-linear function on a [`Mesh`].
#[derive(Debug, Clone)]
pub struct NodalField {
    mesh: Arc<Mesh>,
    values: Vec<f64>,
}

impl NodalField {
    pub fn new(mesh: &Arc<Mesh>, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.node_count() {
            return Err(Error::LengthMismatch {
                expected: mesh.node_count(),
                found: values.len(),
            });
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        Ok(Self {
            mesh: Arc::clone(mesh),
            values,
        })
    }

    pub fn constant(mesh: &Arc<Mesh>, value: f64) -> Result<Self> {
        Self::new(mesh, vec![value; mesh.node_count()])
    }

    pub fn zeros(mesh: &Arc<Mesh>) -> Self {
        Self {
            mesh: Arc::clone(mesh),
            values: vec![0.0; mesh.node_count()],
        }
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn same_mesh(&self, other: &NodalField) -> bool {
        Arc::ptr_eq(&self.mesh, &other.mesh) || *self.mesh == *other.mesh
    }

    pub fn ensure_same_mesh(&self, other: &NodalField) -> Result<()> {
        if self.same_mesh(other) {
            Ok(())
        } else {
            Err(Error::MeshMismatch)
        }
    }

    /// Nodewise combination of two fields on the same mesh.
    pub fn zip_with(&self, other: &NodalField, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.ensure_same_mesh(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        NodalField::new(&self.mesh, values)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        NodalField::new(&self.mesh, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `max_i |a_i - b_i|`.
    pub fn max_abs_diff(&self, other: &NodalField) -> Result<f64> {
        self.ensure_same_mesh(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

/// `(a, b)^h = sum_i w_i a_i b_i`, the integral of the interpolant of `a b`.
pub fn lumped_product(a: &NodalField, b: &NodalField) -> Result<f64> {
    a.ensure_same_mesh(b)?;
    Ok(a.mesh
        .lumped_weights()
        .iter()
        .zip(a.values.iter().zip(&b.values))
        .map(|(w, (x, y))| w * (x * y))
        .sum())
}

/// Lagrange interpolation: the field whose nodal values are `f(x_i)`.
pub fn interpolate(f: impl Fn(f64) -> f64, mesh: &Arc<Mesh>) -> Result<NodalField> {
    let values = mesh.nodes().iter().map(|&x| f(x)).collect();
    NodalField::new(mesh, values)
}

/// Elementwise constant derivative `(u_{j+1} - u_j) / h_j`.
pub fn element_gradient(u: &NodalField) -> Vec<f64> {
    u.values
        .windows(2)
        .zip(u.mesh.element_sizes())
        .map(|(w, h)| (w[1] - w[0]) / h)
        .collect()
}

/// Nodal recovery of the derivative: mean of the two adjacent element
/// gradients, one-sided at the end nodes.
pub fn nodal_gradient(u: &NodalField) -> Vec<f64> {
    let g = element_gradient(u);
    let n = u.len();
    (0..n)
        .map(|i| match i {
            0 => g[0],
            _ if i == n - 1 => g[n - 2],
            _ => 0.5 * (g[i - 1] + g[i]),
        })
        .collect()
}

/// Adds `weight_e / h_e * [[1, -1], [-1, 1]]` for every element into
/// `matrix`, with node `j` mapped to row/column `index(j)`.
pub(crate) fn add_weighted_stiffness(
    matrix: &mut BandedMatrix,
    mesh: &Mesh,
    weight: &[f64],
    scale: f64,
    index: impl Fn(usize) -> (usize, usize),
) {
    for (e, (&w, &h)) in weight.iter().zip(mesh.element_sizes()).enumerate() {
        let k = scale * w / h;
        if k == 0.0 {
            continue;
        }
        let (r0, c0) = index(e);
        let (r1, c1) = index(e + 1);
        matrix.add(r0, c0, k);
        matrix.add(r0, c1, -k);
        matrix.add(r1, c0, -k);
        matrix.add(r1, c1, k);
    }
}

/// Tridiagonal matrix of `(weight * d/dx phi_j, d/dx phi_i)` for an
/// elementwise constant `weight`.
pub fn assemble_weighted_stiffness(weight: &[f64], mesh: &Mesh) -> Result<BandedMatrix> {
    if weight.len() != mesh.element_count() {
        return Err(Error::LengthMismatch {
            expected: mesh.element_count(),
            found: weight.len(),
        });
    }
    let mut matrix = BandedMatrix::zeros(mesh.node_count(), 1);
    add_weighted_stiffness(&mut matrix, mesh, weight, 1.0, |j| (j, j));
    Ok(matrix)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn unit3() -> Arc<Mesh> {
        Arc::new(Mesh::uniform(0.0, 1.0, 3).unwrap())
    }

    #[test]
    fn rejects_bad_meshes() {
        assert!(Mesh::from_nodes(vec![0.0]).is_err());
        assert!(Mesh::from_nodes(vec![0.0, 0.5, 0.5]).is_err());
        assert!(Mesh::from_nodes(vec![0.0, f64::NAN]).is_err());
        assert!(Mesh::uniform(1.0, 0.0, 4).is_err());
    }

    #[test]
    fn lumped_weights_sum_to_length() {
        let mesh = Mesh::from_nodes(vec![-1.0, -0.2, 0.1, 0.9, 2.0]).unwrap();
        let total: f64 = mesh.lumped_weights().iter().sum();
        assert_abs_diff_eq!(total, 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(mesh.lumped_weights()[0], 0.4, epsilon = 1e-15);
    }

    #[test]
    fn lumped_product_examples() {
        let mesh = unit3();
        let one = NodalField::constant(&mesh, 1.0).unwrap();
        assert_abs_diff_eq!(lumped_product(&one, &one).unwrap(), 1.0, epsilon = 1e-15);

        let a = NodalField::new(&mesh, vec![1.0, 0.0, 0.0]).unwrap();
        assert_abs_diff_eq!(lumped_product(&a, &one).unwrap(), 0.25, epsilon = 1e-15);

        let other = Arc::new(Mesh::uniform(0.0, 2.0, 3).unwrap());
        let b = NodalField::constant(&other, 1.0).unwrap();
        assert_eq!(lumped_product(&a, &b), Err(Error::MeshMismatch));
    }

    #[test]
    fn interpolation_examples() {
        let mesh = unit3();
        assert_eq!(interpolate(|x| x, &mesh).unwrap().values(), &[0.0, 0.5, 1.0]);
        assert_eq!(interpolate(|_| 0.0, &mesh).unwrap().values(), &[0.0; 3]);
        assert_eq!(
            interpolate(|x| x * x, &mesh).unwrap().values(),
            &[0.0, 0.25, 1.0]
        );
        assert!(matches!(
            interpolate(|x| 1.0 / (x - 0.5), &mesh),
            Err(Error::NonFinite { index: 1, .. })
        ));
    }

    #[test]
    fn gradient_examples() {
        let mesh = unit3();
        let lin = NodalField::new(&mesh, vec![0.0, 1.0, 2.0]).unwrap();
        assert_eq!(element_gradient(&lin), vec![2.0, 2.0]);
        let c = NodalField::constant(&mesh, 3.0).unwrap();
        assert_eq!(element_gradient(&c), vec![0.0, 0.0]);
        let hat = NodalField::new(&mesh, vec![0.0, 1.0, 0.0]).unwrap();
        assert_eq!(element_gradient(&hat), vec![2.0, -2.0]);
        assert_eq!(nodal_gradient(&hat), vec![2.0, 0.0, -2.0]);
    }

    #[test]
    fn stiffness_examples() {
        let mesh = unit3();
        let k = assemble_weighted_stiffness(&[1.0, 1.0], &mesh).unwrap();
        let expected = [[2.0, -2.0, 0.0], [-2.0, 4.0, -2.0], [0.0, -2.0, 2.0]];
        for (i, row) in expected.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                assert_abs_diff_eq!(k.get(i, j), v, epsilon = 1e-15);
            }
        }

        let zero = assemble_weighted_stiffness(&[0.0, 0.0], &mesh).unwrap();
        assert!((0..3).all(|i| (0..3).all(|j| zero.get(i, j) == 0.0)));

        let first = assemble_weighted_stiffness(&[1.0, 0.0], &mesh).unwrap();
        let expected = [[2.0, -2.0, 0.0], [-2.0, 2.0, 0.0], [0.0, 0.0, 0.0]];
        for (i, row) in expected.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                assert_abs_diff_eq!(first.get(i, j), v, epsilon = 1e-15);
            }
        }

        assert!(matches!(
            assemble_weighted_stiffness(&[1.0], &mesh),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn uniform_spacing_detection() {
        assert_abs_diff_eq!(
            Mesh::uniform(-2.0, 2.0, 101).unwrap().uniform_spacing().unwrap(),
            0.04,
            epsilon = 1e-15
        );
        let skewed = Mesh::from_nodes(vec![0.0, 0.1, 0.5]).unwrap();
        assert!(matches!(
            skewed.uniform_spacing(),
            Err(Error::NonUniformMesh { .. })
        ));
    }
}
