use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::cross_section::{build_mesh, CrossSectionMesh, PINNED};
use crate::eigensolver::{CellForm, FormGradient, FormValue};
use crate::error::{input, Error, Result};
use crate::geometry::{jacobian_and_shear, CurvatureProfile, Profile, TubeSpec, TwistProfile};

/// Boundary treatment at one end of a truncated tube.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndCondition {
    Dirichlet,
    Free,
}

/// Nonpositive potential `V(s, t) = longitudinal(s) · transverse(|t|)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Potential {
    pub longitudinal: Profile,
    pub transverse: Profile,
}

impl Potential {
    pub fn new(longitudinal: Profile, transverse: Profile) -> Self {
        Self {
            longitudinal,
            transverse,
        }
    }

    pub fn value(&self, s: f64, t: &[f64]) -> f64 {
        let r = t.iter().map(|x| x * x).sum::<f64>().sqrt();
        self.longitudinal.value(s) * self.transverse.value(r)
    }

    pub fn is_zero(&self) -> bool {
        self.longitudinal.is_zero() || self.transverse.is_zero()
    }

    /// Same potential with the longitudinal factor scaled by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let scale = |p: &Profile| match *p {
            Profile::Zero => Profile::Zero,
            Profile::Constant { value } => Profile::Constant { value: c * value },
            Profile::Bump {
                center,
                width,
                amplitude,
            } => Profile::Bump {
                center,
                width,
                amplitude: c * amplitude,
            },
            Profile::Plateau {
                half_length,
                taper,
                amplitude,
            } => Profile::Plateau {
                half_length,
                taper,
                amplitude: c * amplitude,
            },
            Profile::Decaying { amplitude } => Profile::Decaying {
                amplitude: c * amplitude,
            },
        };
        Self {
            longitudinal: scale(&self.longitudinal),
            transverse: self.transverse.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct CellGeometry {
    f: f64,
    shear: [f64; 2],
}

/// Tensor product of a uniform grid on `[s_min, s_max]` with a cross-section
/// mesh, with the metric coefficients cached at every cell barycenter.
#[derive(Clone, Debug)]
pub struct TubeMesh {
    section: Arc<CrossSectionMesh>,
    curvature: CurvatureProfile,
    twist: TwistProfile,
    s_min: f64,
    h_s: f64,
    slices: usize,
    ends: (EndCondition, EndCondition),
    free: Vec<usize>,
    n_free: usize,
    geometry: Vec<CellGeometry>,
}

impl TubeMesh {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        section: Arc<CrossSectionMesh>,
        curvature: CurvatureProfile,
        twist: TwistProfile,
        s_min: f64,
        s_max: f64,
        slices: usize,
        left: EndCondition,
        right: EndCondition,
    ) -> Result<Self> {
        let d = curvature.dim();
        if twist.dim() != d || section.dim() + 1 != d {
            return input(format!(
                "dimensions disagree: curvature {d}, twist {}, cross-section {}",
                twist.dim(),
                section.dim()
            ));
        }
        if d > 3 {
            return input("tube discretizations exist for d = 2 and d = 3 only");
        }
        if !(s_max > s_min) || slices == 0 {
            return input("tube mesh needs s_max > s_min and at least one slice");
        }
        let h_s = (s_max - s_min) / slices as f64;
        let nn = section.n_nodes();
        let mut free = vec![PINNED; (slices + 1) * nn];
        let mut n_free = 0;
        for i in 0..=slices {
            let pinned_slice = (i == 0 && left == EndCondition::Dirichlet)
                || (i == slices && right == EndCondition::Dirichlet);
            if pinned_slice {
                continue;
            }
            for j in 0..nn {
                if !section.is_boundary(j) {
                    free[i * nn + j] = n_free;
                    n_free += 1;
                }
            }
        }
        let m = section.dim();
        let mut geometry = Vec::with_capacity(slices * section.n_elements());
        for i in 0..slices {
            let s = s_min + (i as f64 + 0.5) * h_s;
            let kappa = curvature.values(s);
            let r = twist.rotation(s);
            let rp = twist.rotation_derivative(s);
            for e in 0..section.n_elements() {
                let t = section.barycenter(e);
                let (f, shear) = jacobian_and_shear(&kappa, &r, &rp, &t);
                if !(f > 0.0) {
                    return Err(Error::DegenerateMetric { s, f });
                }
                let mut sh = [0.0; 2];
                sh[..m].copy_from_slice(&shear);
                geometry.push(CellGeometry { f, shear: sh });
            }
        }
        Ok(Self {
            section,
            curvature,
            twist,
            s_min,
            h_s,
            slices,
            ends: (left, right),
            free,
            n_free,
            geometry,
        })
    }

    /// Mesh of `[−L, L] × ω` with `M` slices and cross-section resolution `h`.
    pub fn from_spec(
        spec: &TubeSpec,
        h: f64,
        left: EndCondition,
        right: EndCondition,
    ) -> Result<Self> {
        let section = Arc::new(build_mesh(&spec.cross_section, h)?);
        Self::new(
            section,
            spec.curvature.clone(),
            spec.twist.clone(),
            -spec.half_length,
            spec.half_length,
            spec.slices,
            left,
            right,
        )
    }

    pub fn section(&self) -> &Arc<CrossSectionMesh> {
        &self.section
    }

    pub fn curvature(&self) -> &CurvatureProfile {
        &self.curvature
    }

    pub fn twist(&self) -> &TwistProfile {
        &self.twist
    }

    pub fn dim(&self) -> usize {
        self.section.dim() + 1
    }

    pub fn slices(&self) -> usize {
        self.slices
    }

    pub fn step(&self) -> f64 {
        self.h_s
    }

    pub fn s_range(&self) -> (f64, f64) {
        (self.s_min, self.s_min + self.slices as f64 * self.h_s)
    }

    pub fn s_node(&self, i: usize) -> f64 {
        self.s_min + i as f64 * self.h_s
    }

    pub fn ends(&self) -> (EndCondition, EndCondition) {
        self.ends
    }

    pub fn n_nodes(&self) -> usize {
        (self.slices + 1) * self.section.n_nodes()
    }

    pub fn n_free(&self) -> usize {
        self.n_free
    }

    /// Free index of node `(slice, transverse node)` in slice-major order.
    pub fn free_index(&self) -> &[usize] {
        &self.free
    }

    pub fn n_cells(&self) -> usize {
        self.geometry.len()
    }

    /// Smallest Jacobian over all quadrature points.
    pub fn min_jacobian(&self) -> f64 {
        self.geometry
            .iter()
            .map(|g| g.f)
            .fold(f64::INFINITY, f64::min)
    }

    /// Barycenter `(s, t)` of cell `c = slice · E + element`.
    pub fn cell_center(&self, c: usize) -> (f64, Vec<f64>) {
        let ne = self.section.n_elements();
        let (i, e) = (c / ne, c % ne);
        (
            self.s_min + (i as f64 + 0.5) * self.h_s,
            self.section.barycenter(e),
        )
    }

    /// The transformed quotient as a cell form. The weight of every cell is
    /// `f · h_s · |element|`; the gradient rows are
    /// `((D_s − f_μ ∂_μ)ψ / f, ∇_t ψ)`.
    pub fn form(&self, potential: Option<&Potential>) -> Result<CellForm> {
        let sec = &self.section;
        let m = sec.dim();
        let nv = m + 1;
        let k = 2 * nv;
        let d = m + 1;
        let nn = sec.n_nodes();
        let ne = sec.n_elements();
        let mut form = CellForm::new(self.n_free, d, k)?;
        let bary = vec![1.0 / k as f64; k];
        let mut dofs = vec![PINNED; k];
        let mut grad = vec![0.0; d * k];
        for i in 0..self.slices {
            let s = self.s_min + (i as f64 + 0.5) * self.h_s;
            for e in 0..ne {
                let nodes = sec.element(e);
                for a in 0..nv {
                    dofs[a] = self.free[i * nn + nodes[a]];
                    dofs[nv + a] = self.free[(i + 1) * nn + nodes[a]];
                }
                let geo = self.geometry[i * ne + e];
                let g = sec.gradient(e);
                grad.iter_mut().for_each(|x| *x = 0.0);
                let ds = 1.0 / (nv as f64 * self.h_s);
                for a in 0..nv {
                    let mut shear_term = 0.0;
                    for mu in 0..m {
                        let tmu = 0.5 * g[mu * nv + a];
                        grad[(mu + 1) * k + a] = tmu;
                        grad[(mu + 1) * k + nv + a] = tmu;
                        shear_term += geo.shear[mu] * tmu;
                    }
                    grad[a] = (-ds - shear_term) / geo.f;
                    grad[nv + a] = (ds - shear_term) / geo.f;
                }
                let v = match potential {
                    Some(pot) => {
                        let val = pot.value(s, &sec.barycenter(e));
                        if val > 1e-14 {
                            return input(format!(
                                "potential must be nonpositive, found V = {val} at s = {s}"
                            ));
                        }
                        val
                    }
                    None => 0.0,
                };
                form.push_cell(&dofs, &grad, &bary, geo.f * self.h_s * sec.volume(e), v);
            }
        }
        Ok(form)
    }
}

/// Nodal coefficients of a field on a tube mesh, slice-major, including the
/// pinned entries (which are exactly zero).
#[derive(Clone, Debug)]
pub struct DiscreteField {
    values: Vec<f64>,
}

impl DiscreteField {
    /// Checks that pinned entries vanish.
    pub fn new(mesh: &TubeMesh, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.n_nodes() {
            return input(format!(
                "field has {} values, mesh has {} nodes",
                values.len(),
                mesh.n_nodes()
            ));
        }
        for (i, (&v, &d)) in values.iter().zip(mesh.free_index()).enumerate() {
            if d == PINNED && v != 0.0 {
                return input(format!(
                    "field violates the constraint mask at node {i} (value {v})"
                ));
            }
        }
        Ok(Self { values })
    }

    pub fn from_free(mesh: &TubeMesh, free_values: &[f64]) -> Self {
        let values = mesh
            .free_index()
            .iter()
            .map(|&d| if d == PINNED { 0.0 } else { free_values[d] })
            .collect();
        Self { values }
    }

    /// Samples `g(s, node)` at every free node; pinned entries are zero.
    pub fn from_fn(mesh: &TubeMesh, mut g: impl FnMut(f64, usize) -> f64) -> Self {
        let nn = mesh.section().n_nodes();
        let values = mesh
            .free_index()
            .iter()
            .enumerate()
            .map(|(idx, &d)| {
                if d == PINNED {
                    0.0
                } else {
                    g(mesh.s_node(idx / nn), idx % nn)
                }
            })
            .collect();
        Self { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn free_values(&self, mesh: &TubeMesh) -> Vec<f64> {
        let mut out = vec![0.0; mesh.n_free()];
        for (&v, &d) in self.values.iter().zip(mesh.free_index()) {
            if d != PINNED {
                out[d] = v;
            }
        }
        out
    }

    /// CSV with columns `s, t1[, t2], psi`.
    pub fn write_csv<W: Write>(&self, mesh: &TubeMesh, mut out: W) -> Result<()> {
        let sec = mesh.section();
        let nn = sec.n_nodes();
        if sec.dim() == 1 {
            writeln!(out, "s,t1,psi")?;
        } else {
            writeln!(out, "s,t1,t2,psi")?;
        }
        for (idx, v) in self.values.iter().enumerate() {
            let s = mesh.s_node(idx / nn);
            write!(out, "{s}")?;
            for x in sec.node(idx % nn) {
                write!(out, ",{x}")?;
            }
            writeln!(out, ",{v}")?;
        }
        Ok(())
    }
}

/// Energy `Q`, p-mass `N` and potential term of `ψ` on `mesh`.
pub fn assemble(
    mesh: &TubeMesh,
    field: &DiscreteField,
    p: f64,
    eps: f64,
    potential: Option<&Potential>,
) -> Result<FormValue> {
    check_field(mesh, field, p, eps)?;
    let form = mesh.form(potential)?;
    Ok(form.evaluate(&field.free_values(mesh), p, eps))
}

/// As [`assemble`], with gradients with respect to the free coefficients.
pub fn assemble_gradient(
    mesh: &TubeMesh,
    field: &DiscreteField,
    p: f64,
    eps: f64,
    potential: Option<&Potential>,
) -> Result<FormGradient> {
    check_field(mesh, field, p, eps)?;
    let form = mesh.form(potential)?;
    Ok(form.gradient(&field.free_values(mesh), p, eps))
}

fn check_field(mesh: &TubeMesh, field: &DiscreteField, p: f64, eps: f64) -> Result<()> {
    if !(p > 1.0) || !(eps >= 0.0) {
        return input(format!("need p > 1 and ε ≥ 0, got p = {p}, ε = {eps}"));
    }
    DiscreteField::new(mesh, field.values.clone()).map(|_| ())
}
