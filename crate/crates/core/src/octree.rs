//! Multilevel box tree over RWG centroids and its interaction lists.
//!
//! Level 0 is a single cube enclosing the mesh; level `l` boxes have edge
//! `a₀/2^l`. Boxes are half-open `[low, high)` per axis and only occupied
//! boxes are kept, sorted by integer coordinates.

use std::collections::HashMap;

use serde::Serialize;

use crate::mesh::{RwgBasis, SurfaceMesh, Vec3};
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct TreeBox {
    pub coord: [i64; 3],
    pub center: Vec3,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    /// Basis indices (finest level only).
    pub members: Vec<usize>,
    /// Same-level boxes with `|Δ| ≤ 1` per axis, including itself.
    pub near: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct Level {
    pub size: f64,
    pub boxes: Vec<TreeBox>,
    pub index: HashMap<[i64; 3], usize>,
}

#[derive(Clone, Debug)]
pub struct Octree {
    pub origin: Vec3,
    pub a0: f64,
    pub wavelength: f64,
    pub levels: Vec<Level>,
    /// Finest-level box of each basis function.
    pub basis_box: Vec<usize>,
    /// True when the tree is too shallow for far interactions (`L_f < 2`).
    pub dense_fallback: bool,
}

/// How far interactions are routed through translations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ListMode {
    /// Far lists at levels `2..=L_f`; neighbouring finest boxes stay near.
    Standard,
    /// Siblings are translated at levels `L_f..=1`; only own-box pairs stay
    /// near. Valid for the sin kernel only.
    AllTranslate,
    /// Standard far lists plus translation of non-self neighbouring boxes at
    /// the finest level; only own-box pairs stay near.
    AllTranslateFlat,
}

/// Translated box pairs per level plus the untranslated finest-level pairs.
#[derive(Clone, Debug)]
pub struct InteractionLists {
    pub mode: ListMode,
    /// Coarsest level carrying translations.
    pub coarsest: usize,
    /// `translate[l][m]`: source boxes translated into box `m` at level `l`.
    pub translate: Vec<Vec<Vec<usize>>>,
    /// `near[m]`: finest boxes whose pairs with `m` go through the near block.
    pub near: Vec<Vec<usize>>,
}

impl InteractionLists {
    /// Distinct integer offsets `coord(m) − coord(m')` used at level `l`.
    pub fn offsets(&self, tree: &Octree, l: usize) -> Vec<[i64; 3]> {
        let mut v: Vec<[i64; 3]> = Vec::new();
        let boxes = &tree.levels[l].boxes;
        for (m, list) in self.translate[l].iter().enumerate() {
            for &s in list {
                let (a, b) = (boxes[m].coord, boxes[s].coord);
                v.push([a[0] - b[0], a[1] - b[1], a[2] - b[2]]);
            }
        }
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn is_active(&self, l: usize) -> bool {
        self.translate.get(l).is_some_and(|t| t.iter().any(|x| !x.is_empty()))
    }
}

impl Octree {
    /// Builds the tree with finest boxes of `target_box` wavelengths.
    pub fn build(mesh: &SurfaceMesh, basis: &RwgBasis, wavelength: f64, target_box: f64) -> Result<Self> {
        if !(0.2..=0.5).contains(&target_box) {
            return Err(Error::InvalidArgument(format!(
                "target box {target_box} outside [0.2, 0.5] wavelengths"
            )));
        }
        if basis.centroids.is_empty() {
            return Err(Error::DegenerateExtent);
        }
        let c0 = basis.centroids[0];
        if basis.centroids.len() > 1 && basis.centroids.iter().all(|c| (c - c0).norm() == 0.0) {
            return Err(Error::DegenerateExtent);
        }
        let (lo, hi) = mesh.bounding_box();
        let extent = (hi - lo).max();
        if extent <= 0.0 {
            return Err(Error::DegenerateExtent);
        }
        let finest = target_box * wavelength;
        let lf = (extent / finest).log2().ceil().max(0.0) as usize;
        let a0 = finest * (1u64 << lf) as f64;
        let center = (lo + hi) / 2.0;
        let origin = center - Vec3::repeat(a0 / 2.0);

        let nside = 1i64 << lf;
        let coord_of = |p: &Vec3| -> [i64; 3] {
            let mut c = [0i64; 3];
            for d in 0..3 {
                let x = ((p[d] - origin[d]) / finest).floor() as i64;
                c[d] = x.clamp(0, nside - 1);
            }
            c
        };

        // finest level
        let mut fine: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
        for (i, c) in basis.centroids.iter().enumerate() {
            fine.entry(coord_of(c)).or_default().push(i);
        }
        let mut levels: Vec<Level> = Vec::with_capacity(lf + 1);
        let mut coords: Vec<[i64; 3]> = fine.keys().copied().collect();
        coords.sort_unstable();
        let mut per_level_coords = vec![Vec::new(); lf + 1];
        per_level_coords[lf] = coords;
        for l in (0..lf).rev() {
            let mut c: Vec<[i64; 3]> = per_level_coords[l + 1].iter().map(|x| x.map(|v| v >> 1)).collect();
            c.sort_unstable();
            c.dedup();
            per_level_coords[l] = c;
        }
        for (l, coords) in per_level_coords.into_iter().enumerate() {
            let size = a0 / (1u64 << l) as f64;
            let index: HashMap<[i64; 3], usize> = coords.iter().enumerate().map(|(i, c)| (*c, i)).collect();
            let boxes = coords
                .iter()
                .map(|c| TreeBox {
                    coord: *c,
                    center: origin + Vec3::new(c[0] as f64 + 0.5, c[1] as f64 + 0.5, c[2] as f64 + 0.5) * size,
                    parent: None,
                    children: Vec::new(),
                    members: Vec::new(),
                    near: Vec::new(),
                })
                .collect();
            levels.push(Level { size, boxes, index });
        }
        // links
        for l in 1..=lf {
            for b in 0..levels[l].boxes.len() {
                let pc = levels[l].boxes[b].coord.map(|v| v >> 1);
                let p = levels[l - 1].index[&pc];
                levels[l].boxes[b].parent = Some(p);
                levels[l - 1].boxes[p].children.push(b);
            }
        }
        let mut basis_box = vec![0; basis.centroids.len()];
        for (c, members) in fine {
            let b = levels[lf].index[&c];
            for &i in &members {
                basis_box[i] = b;
            }
            levels[lf].boxes[b].members = members;
            levels[lf].boxes[b].members.sort_unstable();
        }
        // near sets
        for level in &mut levels {
            let near: Vec<Vec<usize>> = level
                .boxes
                .iter()
                .map(|bx| {
                    let mut v = Vec::new();
                    for dx in -1..=1 {
                        for dy in -1..=1 {
                            for dz in -1..=1 {
                                let c = [bx.coord[0] + dx, bx.coord[1] + dy, bx.coord[2] + dz];
                                if let Some(&j) = level.index.get(&c) {
                                    v.push(j);
                                }
                            }
                        }
                    }
                    v.sort_unstable();
                    v
                })
                .collect();
            for (bx, n) in level.boxes.iter_mut().zip(near) {
                bx.near = n;
            }
        }
        Ok(Self {
            origin,
            a0,
            wavelength,
            levels,
            basis_box,
            dense_fallback: lf < 2,
        })
    }

    pub fn finest(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn box_size(&self, l: usize) -> f64 {
        self.levels[l].size
    }

    pub fn is_near(&self, l: usize, a: usize, b: usize) -> bool {
        let (ca, cb) = (self.levels[l].boxes[a].coord, self.levels[l].boxes[b].coord);
        (0..3).all(|d| (ca[d] - cb[d]).abs() <= 1)
    }

    /// Children of the parent's neighbours that are not neighbours of `m`.
    fn far_list(&self, l: usize, m: usize) -> Vec<usize> {
        let parent = self.levels[l].boxes[m].parent.expect("level ≥ 1");
        let mut v = Vec::new();
        for &pn in &self.levels[l - 1].boxes[parent].near {
            for &c in &self.levels[l - 1].boxes[pn].children {
                if !self.is_near(l, m, c) {
                    v.push(c);
                }
            }
        }
        v.sort_unstable();
        v
    }

    pub fn interaction_lists(&self, mode: ListMode) -> InteractionLists {
        let lf = self.finest();
        let nlev = self.levels.len();
        let mut translate: Vec<Vec<Vec<usize>>> = self.levels.iter().map(|lv| vec![Vec::new(); lv.boxes.len()]).collect();
        let nfine = self.levels[lf].boxes.len();
        if self.dense_fallback {
            return InteractionLists {
                mode,
                coarsest: nlev,
                translate,
                near: (0..nfine).map(|_| (0..nfine).collect()).collect(),
            };
        }
        let coarsest = match mode {
            ListMode::AllTranslate => 1,
            _ => 2,
        };
        for l in coarsest..=lf {
            for m in 0..self.levels[l].boxes.len() {
                translate[l][m] = match mode {
                    ListMode::Standard | ListMode::AllTranslateFlat => self.far_list(l, m),
                    ListMode::AllTranslate => {
                        let p = self.levels[l].boxes[m].parent.expect("level ≥ 1");
                        self.levels[l - 1].boxes[p].children.iter().copied().filter(|&c| c != m).collect()
                    }
                };
            }
        }
        let near = match mode {
            ListMode::Standard => self.levels[lf].boxes.iter().map(|b| b.near.clone()).collect(),
            ListMode::AllTranslate => (0..nfine).map(|m| vec![m]).collect(),
            ListMode::AllTranslateFlat => {
                for m in 0..nfine {
                    let extra: Vec<usize> = self.levels[lf].boxes[m].near.iter().copied().filter(|&b| b != m).collect();
                    let list = &mut translate[lf][m];
                    list.extend(extra);
                    list.sort_unstable();
                }
                (0..nfine).map(|m| vec![m]).collect()
            }
        };
        InteractionLists {
            mode,
            coarsest,
            translate,
            near,
        }
    }

    pub fn stats(&self, lists: &InteractionLists) -> TreeStats {
        TreeStats {
            a0: self.a0,
            finest_level: self.finest(),
            finest_box_wavelengths: self.box_size(self.finest()) / self.wavelength,
            dense_fallback: self.dense_fallback,
            mode: lists.mode,
            levels: (0..self.levels.len())
                .map(|l| {
                    let sizes: Vec<usize> = lists.translate[l].iter().map(Vec::len).collect();
                    LevelStats {
                        level: l,
                        box_size: self.box_size(l),
                        occupied: self.levels[l].boxes.len(),
                        translated_pairs: sizes.iter().sum(),
                        max_list: sizes.iter().copied().max().unwrap_or(0),
                        max_near: self.levels[l].boxes.iter().map(|b| b.near.len()).max().unwrap_or(0),
                    }
                })
                .collect(),
            mean_members: self.basis_box.len() as f64 / self.levels[self.finest()].boxes.len() as f64,
        }
    }
}

/// JSON-friendly tree summary.
#[derive(Clone, Debug, Serialize)]
pub struct TreeStats {
    pub a0: f64,
    pub finest_level: usize,
    pub finest_box_wavelengths: f64,
    pub dense_fallback: bool,
    pub mode: ListMode,
    pub levels: Vec<LevelStats>,
    pub mean_members: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LevelStats {
    pub level: usize,
    pub box_size: f64,
    pub occupied: usize,
    pub translated_pairs: usize,
    pub max_list: usize,
    pub max_near: usize,
}
