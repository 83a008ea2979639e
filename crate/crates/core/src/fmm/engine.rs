//! Aggregation, translation and disaggregation over the octree.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{compute_signatures, translator, truncation_number, Interpolator, Kernel, SphereQuadrature};
use crate::assembly::{Assembler, NearBlock, QuadratureOrders};
use crate::linalg::{CsrMatrix, LinearOperator};
use crate::mesh::{RwgBasis, SurfaceMesh, Vec3};
use crate::octree::{InteractionLists, ListMode, Octree};
use crate::{Error, Result, C64, ETA0};

/// Which part of the impedance matrix an operator applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OperatorKind {
    Z,
    R,
    X,
}

impl OperatorKind {
    pub fn name(self) -> &'static str {
        match self {
            OperatorKind::Z => "Z",
            OperatorKind::R => "R",
            OperatorKind::X => "X",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlfmaOptions {
    /// Digits of accuracy in the truncation formula.
    pub d0: f64,
    /// Finest box edge in wavelengths.
    pub target_box: f64,
    /// Lagrange points per direction between levels.
    pub stencil: usize,
    /// Interaction lists of the resistance operator.
    pub r_lists: ListMode,
    pub quadrature: QuadratureOrders,
}

impl Default for MlfmaOptions {
    fn default() -> Self {
        Self {
            d0: 3.0,
            target_box: 0.25,
            stencil: super::sphere::DEFAULT_STENCIL,
            r_lists: ListMode::AllTranslate,
            quadrature: QuadratureOrders::default(),
        }
    }
}

/// Kernel-independent setup shared by the Z, R and X operators: tree, near
/// block, direction grids, finest-level signatures and interlevel operators.
pub struct FmmContext {
    pub k: f64,
    pub options: MlfmaOptions,
    pub tree: Octree,
    pub near: NearBlock,
    /// Direction grid per level (`None` at level 0 and for a dense fallback).
    pub quads: Vec<Option<SphereQuadrature>>,
    /// `N × 2nq` radiation patterns about the finest box centers.
    sig: Vec<C64>,
    /// `interp[l]` maps level `l` grids to level `l − 1`.
    interp: Vec<Option<Interpolator>>,
    /// `shifts[l][octant][Q]`: `e^{−ik k̂_Q·(c − p)}` on the parent grid.
    shifts: Vec<Vec<Vec<C64>>>,
}

fn octant(coord: [i64; 3]) -> usize {
    (coord[0].rem_euclid(2) + 2 * coord[1].rem_euclid(2) + 4 * coord[2].rem_euclid(2)) as usize
}

impl FmmContext {
    pub fn build(mesh: &SurfaceMesh, basis: &RwgBasis, wavelength: f64, options: MlfmaOptions) -> Result<Self> {
        let k = 2.0 * std::f64::consts::PI / wavelength;
        let tree = Octree::build(mesh, basis, wavelength, options.target_box)?;
        let assembler = Assembler::with_orders(mesh, basis, k, options.quadrature.clone())?;
        let near = assembler.assemble_near(&tree)?;
        let lf = tree.finest();
        let nlev = tree.levels.len();
        let mut quads: Vec<Option<SphereQuadrature>> = vec![None; nlev];
        let mut interp: Vec<Option<Interpolator>> = vec![None; nlev];
        let mut shifts = vec![Vec::new(); nlev];
        let mut sig = Vec::new();
        if !tree.dense_fallback {
            for (l, q) in quads.iter_mut().enumerate().skip(1) {
                *q = Some(SphereQuadrature::new(truncation_number(tree.box_size(l), options.d0, k)));
            }
            for l in 2..=lf {
                let (from, to) = (quads[l].as_ref().expect("grid"), quads[l - 1].as_ref().expect("grid"));
                interp[l] = Some(Interpolator::new(from, to, options.stencil)?);
                let half = tree.box_size(l) / 2.0;
                shifts[l] = (0..8)
                    .map(|o| {
                        let d = Vec3::new(
                            if o & 1 == 1 { half } else { -half },
                            if o & 2 == 2 { half } else { -half },
                            if o & 4 == 4 { half } else { -half },
                        );
                        to.dirs.iter().map(|dir| C64::from_polar(1.0, -k * dir.dot(&d))).collect()
                    })
                    .collect();
            }
            let fine = quads[lf].as_ref().expect("grid");
            let boxes = &tree.levels[lf].boxes;
            sig = compute_signatures(mesh, basis, k, fine, |n| boxes[tree.basis_box[n]].center).concat();
        }
        Ok(Self { k, options, tree, near, quads, sig, interp, shifts })
    }

    pub fn len(&self) -> usize {
        self.tree.basis_box.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Truncation number per level (0 where no grid is built).
    pub fn truncation(&self) -> Vec<usize> {
        self.quads.iter().map(|q| q.as_ref().map_or(0, |q| q.l)).collect()
    }

    /// Builds the matvec operator for `kind` with the default list choice.
    pub fn operator(self: &Arc<Self>, kind: OperatorKind) -> Result<Mlfma> {
        let lists = match kind {
            OperatorKind::R => self.options.r_lists,
            _ => ListMode::Standard,
        };
        Mlfma::new(self.clone(), kind, lists)
    }
}

/// Matvec with one of Z, R or X in the characteristic-mode convention
/// `Z = R + iX`.
pub struct Mlfma {
    ctx: Arc<FmmContext>,
    pub kind: OperatorKind,
    pub kernel: Kernel,
    pub lists: InteractionLists,
    near: CsrMatrix,
    /// `tables[l][t]`: translator samples for the `t`-th distinct offset.
    tables: Vec<Vec<Vec<C64>>>,
    /// `pairs[l][m]`: `(source box, table index)`.
    pairs: Vec<Vec<Vec<(usize, usize)>>>,
    prefactor: C64,
    matvecs: AtomicUsize,
}

impl Mlfma {
    pub fn new(ctx: Arc<FmmContext>, kind: OperatorKind, mode: ListMode) -> Result<Self> {
        let kernel = match kind {
            OperatorKind::Z => Kernel::Helmholtz,
            OperatorKind::R => Kernel::Sin,
            OperatorKind::X => Kernel::Cos,
        };
        if kernel != Kernel::Sin && mode != ListMode::Standard {
            return Err(Error::KernelListMismatch(format!(
                "{} kernel requires standard lists, got {mode:?}",
                kernel.name()
            )));
        }
        let tree = &ctx.tree;
        let lf = tree.finest();
        if kernel == Kernel::Cos && !tree.dense_fallback && tree.box_size(lf) < 0.4 * tree.wavelength {
            log::warn!(
                "cos-kernel translation with {:.3}λ finest boxes: the decomposition degrades below 0.4λ",
                tree.box_size(lf) / tree.wavelength
            );
        }
        let lists = tree.interaction_lists(mode);
        let fin_boxes = &tree.levels[lf].boxes;
        let near_pair = |i: usize, j: usize| {
            let (bi, bj) = (tree.basis_box[i], tree.basis_box[j]);
            lists.near[bi].binary_search(&bj).is_ok()
        };
        debug_assert_eq!(fin_boxes.len(), lists.near.len());
        let part = |z: C64| match kind {
            OperatorKind::Z => z,
            OperatorKind::R => C64::new(z.re, 0.0),
            OperatorKind::X => C64::new(z.im, 0.0),
        };
        let near = ctx.near.matrix.filter(near_pair).map_values(part);

        let k = ctx.k;
        let nlev = tree.levels.len();
        let mut tables = vec![Vec::new(); nlev];
        let mut pairs = vec![Vec::new(); nlev];
        for l in 0..nlev {
            if !lists.is_active(l) {
                continue;
            }
            let quad = ctx.quads[l].as_ref().expect("grid on active level");
            let boxes = &tree.levels[l].boxes;
            let mut ids: HashMap<[i64; 3], usize> = HashMap::new();
            let a = tree.box_size(l);
            for off in lists.offsets(tree, l) {
                let r = Vec3::new(off[0] as f64, off[1] as f64, off[2] as f64) * a;
                ids.insert(off, tables[l].len());
                tables[l].push(translator(kernel, quad.l, k, &r, &quad.dirs)?);
            }
            pairs[l] = lists.translate[l]
                .iter()
                .enumerate()
                .map(|(m, list)| {
                    list.iter()
                        .map(|&s| {
                            let (cm, cs) = (boxes[m].coord, boxes[s].coord);
                            (s, ids[&[cm[0] - cs[0], cm[1] - cs[1], cm[2] - cs[2]]])
                        })
                        .collect()
                })
                .collect();
        }
        let c = k * k * ETA0 / (4.0 * std::f64::consts::PI);
        let prefactor = match kind {
            // engine-convention Z = −ikη·E, conjugated on the way in and out
            OperatorKind::Z => C64::new(c, 0.0),
            // R = kη·Im E, X = kη·Re E
            OperatorKind::R | OperatorKind::X => C64::new(0.0, c),
        };
        Ok(Self { ctx, kind, kernel, lists, near, tables, pairs, prefactor, matvecs: AtomicUsize::new(0) })
    }

    pub fn context(&self) -> &FmmContext {
        &self.ctx
    }

    /// Near part of this operator.
    pub fn near(&self) -> &CsrMatrix {
        &self.near
    }

    pub fn matvec_count(&self) -> usize {
        self.matvecs.load(Ordering::Relaxed)
    }

    pub fn reset_count(&self) {
        self.matvecs.store(0, Ordering::Relaxed);
    }

    /// Far-field contribution `Σ_q w_q α conj(P_i)·(aggregated P u)` without
    /// prefactor.
    fn far(&self, u: &[C64], y: &mut [C64]) {
        let ctx = &*self.ctx;
        let tree = &ctx.tree;
        let lf = tree.finest();
        let coarsest = self.lists.coarsest;
        if coarsest > lf {
            return;
        }
        let zero = C64::new(0.0, 0.0);
        let fine = ctx.quads[lf].as_ref().expect("grid");
        let nqf = fine.len();
        let stride = 2 * nqf;

        // outgoing fields per level
        let mut out: Vec<Vec<C64>> = vec![Vec::new(); lf + 1];
        out[lf] = vec![zero; tree.levels[lf].boxes.len() * stride];
        for (n, &un) in u.iter().enumerate() {
            if un == zero {
                continue;
            }
            let b = tree.basis_box[n];
            let dst = &mut out[lf][b * stride..(b + 1) * stride];
            for (d, s) in dst.iter_mut().zip(&ctx.sig[n * stride..(n + 1) * stride]) {
                *d += s * un;
            }
        }
        for l in (coarsest + 1..=lf).rev() {
            let nq = ctx.quads[l].as_ref().expect("grid").len();
            let np = ctx.quads[l - 1].as_ref().expect("grid").len();
            let it = ctx.interp[l].as_ref().expect("interpolator");
            let mut parent = vec![zero; tree.levels[l - 1].boxes.len() * 2 * np];
            let mut tmp = vec![zero; 2 * np];
            for (c, bx) in tree.levels[l].boxes.iter().enumerate() {
                let src = &out[l][c * 2 * nq..(c + 1) * 2 * nq];
                it.interp(&src[..nq], &mut tmp[..np], true);
                it.interp(&src[nq..], &mut tmp[np..], true);
                let p = bx.parent.expect("parent");
                let sh = &ctx.shifts[l][octant(bx.coord)];
                let dst = &mut parent[p * 2 * np..(p + 1) * 2 * np];
                for q in 0..np {
                    dst[q] += tmp[q] * sh[q];
                    dst[np + q] += tmp[np + q] * sh[q];
                }
            }
            out[l - 1] = parent;
        }

        // incoming fields per level, translated then passed down
        let mut inc: Vec<Vec<C64>> = vec![Vec::new(); lf + 1];
        for l in coarsest..=lf {
            let nq = ctx.quads[l].as_ref().expect("grid").len();
            let mut level = vec![zero; tree.levels[l].boxes.len() * 2 * nq];
            if l > coarsest {
                let np = ctx.quads[l - 1].as_ref().expect("grid").len();
                let it = ctx.interp[l].as_ref().expect("interpolator");
                let mut tmp = vec![zero; 2 * np];
                for (c, bx) in tree.levels[l].boxes.iter().enumerate() {
                    let p = bx.parent.expect("parent");
                    let src = &inc[l - 1][p * 2 * np..(p + 1) * 2 * np];
                    let sh = &ctx.shifts[l][octant(bx.coord)];
                    for q in 0..np {
                        tmp[q] = src[q] * sh[q].conj();
                        tmp[np + q] = src[np + q] * sh[q].conj();
                    }
                    let dst = &mut level[c * 2 * nq..(c + 1) * 2 * nq];
                    it.anterp_add(&tmp[..np], &mut dst[..nq], true);
                    it.anterp_add(&tmp[np..], &mut dst[nq..], true);
                }
            }
            if self.lists.is_active(l) {
                for (m, list) in self.pairs[l].iter().enumerate() {
                    let dst = &mut level[m * 2 * nq..(m + 1) * 2 * nq];
                    for &(s, t) in list {
                        let src = &out[l][s * 2 * nq..(s + 1) * 2 * nq];
                        let al = &self.tables[l][t];
                        for q in 0..nq {
                            dst[q] += src[q] * al[q];
                            dst[nq + q] += src[nq + q] * al[q];
                        }
                    }
                }
            }
            inc[l] = level;
        }

        let fin = &inc[lf];
        for (i, yi) in y.iter_mut().enumerate() {
            let b = tree.basis_box[i];
            let f = &fin[b * stride..(b + 1) * stride];
            let p = &ctx.sig[i * stride..(i + 1) * stride];
            let mut acc = zero;
            for q in 0..nqf {
                acc += (p[q].conj() * f[q] + p[nqf + q].conj() * f[nqf + q]) * fine.weights[q];
            }
            *yi += acc;
        }
    }
}

impl LinearOperator for Mlfma {
    fn dim(&self) -> usize {
        self.ctx.len()
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        self.matvecs.fetch_add(1, Ordering::Relaxed);
        let n = self.dim();
        let mut far = vec![C64::new(0.0, 0.0); n];
        if self.kind == OperatorKind::Z {
            let xc: Vec<C64> = x.iter().map(|v| v.conj()).collect();
            self.far(&xc, &mut far);
            far.iter_mut().for_each(|v| *v = (*v * self.prefactor).conj());
        } else {
            self.far(x, &mut far);
            far.iter_mut().for_each(|v| *v *= self.prefactor);
        }
        self.near.matvec(x, y);
        for (a, b) in y.iter_mut().zip(&far) {
            *a += b;
        }
    }
}
