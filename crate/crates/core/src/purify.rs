//! Identified ANOVA components from a fitted forest.
//!
//! The raw trees of a forest sum to the right prediction, but the split of
//! that prediction into components is not unique. Purification fixes it:
//! every component must integrate to zero along each of its coordinates
//! under the uniform weight on the training bounding box. Components are
//! first flattened onto rectangular grids whose cells refine every leaf, and
//! then mass is moved from each component into the component without the
//! integrated coordinate (or into the constant) until the constraint holds.
//! The total prediction on the bounding box does not change.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use ndarray::{ArrayD, Axis, IxDyn, Slice};

use crate::dataset::FeatureRange;
use crate::error::{Error, Result};
use crate::model::ForestModel;
use crate::region::CoordSet;

/// Upper bound on the number of cells of one flattened component.
pub const MAX_GRID_CELLS: usize = 16_000_000;

/// Sweep budget of [`purify`].
pub const MAX_SWEEPS: usize = 10_000;

/// A piecewise constant function over a rectangular grid.
///
/// Cell `i` of an axis is the half-open interval `(breaks[i], breaks[i+1]]`;
/// points at or below the first break are assigned to the first cell. The
/// first cell may have zero width (`breaks[0] == breaks[1]`), in which case it
/// only holds the lower end of the axis.
#[derive(Debug, Clone, PartialEq)]
pub struct GridComponent {
    pub coords: CoordSet,
    pub axis_breaks: Vec<Vec<f64>>,
    pub values: ArrayD<f64>,
}

impl GridComponent {
    /// Zero-valued component on the given breaks.
    pub fn zeros(coords: CoordSet, axis_breaks: Vec<Vec<f64>>) -> Self {
        let shape: Vec<usize> = axis_breaks.iter().map(|b| b.len() - 1).collect();
        Self {
            coords,
            axis_breaks,
            values: ArrayD::zeros(IxDyn(&shape)),
        }
    }

    pub fn cell_count(&self) -> usize {
        self.values.len()
    }

    /// Grid index of the cell holding the full `d`-vector `x`.
    pub fn cell_of(&self, x: &[f64]) -> Vec<usize> {
        self.coords
            .iter()
            .zip(&self.axis_breaks)
            .map(|(k, breaks)| locate(breaks, x[k]))
            .collect()
    }

    pub fn value_at(&self, x: &[f64]) -> f64 {
        self.values[IxDyn(&self.cell_of(x))]
    }

    /// Cell widths along `axis` divided by the axis span.
    fn weights(&self, axis: usize) -> Vec<f64> {
        let b = &self.axis_breaks[axis];
        let span = b[b.len() - 1] - b[0];
        b.windows(2).map(|w| (w[1] - w[0]) / span).collect()
    }

    /// Uniform-weight mean along `axis`, for every configuration of the other axes.
    pub fn axis_mean(&self, axis: usize) -> ArrayD<f64> {
        let w = self.weights(axis);
        self.values
            .map_axis(Axis(axis), |lane| lane.iter().zip(&w).map(|(v, w)| v * w).sum())
    }
}

fn locate(breaks: &[f64], v: f64) -> usize {
    let cells = breaks.len() - 1;
    breaks.partition_point(|&b| b < v).saturating_sub(1).min(cells - 1)
}

/// Flattens every component of `model` onto grids over `ranges`.
///
/// The output holds each coordinate set with a tree in some family, every
/// subset of those sets, and all singletons. The breaks of coordinate `k` in
/// the component over `u` are the range endpoints plus every leaf bound on
/// `k` in `[min, max)` of any tree over a superset of `u`; hence a
/// lower order grid refines the matching axes of every higher order grid.
pub fn flatten(model: &ForestModel, ranges: &[FeatureRange]) -> Result<BTreeMap<CoordSet, GridComponent>> {
    if ranges.len() != model.d() {
        return Err(Error::LengthMismatch {
            left: ranges.len(),
            right: model.d(),
        });
    }
    let spans: Vec<(f64, f64)> = ranges
        .iter()
        .map(|r| if r.max > r.min { (r.min, r.max) } else { (r.min - 0.5, r.max + 0.5) })
        .collect();

    // Interior leaf bounds per (tree, coordinate), over all families.
    let mut bounds: BTreeMap<CoordSet, BTreeMap<usize, BTreeSet<OrderedBound>>> = BTreeMap::new();
    for family in model.families() {
        for tree in family.trees().filter(|t| t.leaf_count() > 0) {
            let per_coord = bounds.entry(tree.coords().clone()).or_default();
            for leaf in tree.leaves() {
                for (p, k) in tree.coords().iter().enumerate() {
                    let (lo, hi) = spans[k];
                    let set = per_coord.entry(k).or_default();
                    for b in [leaf.region.lower()[p], leaf.region.upper()[p]] {
                        if lo <= b && b < hi {
                            set.insert(OrderedBound(b));
                        }
                    }
                }
            }
        }
    }

    let mut sets: BTreeSet<CoordSet> = (0..model.d()).map(CoordSet::singleton).collect();
    for coords in bounds.keys() {
        for subset in nonempty_subsets(coords) {
            sets.insert(subset);
        }
    }

    let scale = 1.0 / model.families().len().max(1) as f64;
    let mut out = BTreeMap::new();
    for u in sets {
        let axis_breaks: Vec<Vec<f64>> = u
            .iter()
            .map(|k| {
                let mut inner: BTreeSet<OrderedBound> = BTreeSet::new();
                for (w, per_coord) in &bounds {
                    if u.is_subset_of(w) {
                        if let Some(set) = per_coord.get(&k) {
                            inner.extend(set.iter().copied());
                        }
                    }
                }
                // A bound at the range minimum yields a zero-width first cell
                // holding the value at the minimum itself.
                let mut b = vec![spans[k].0];
                b.extend(inner.into_iter().map(|v| v.0));
                b.push(spans[k].1);
                b
            })
            .collect();
        let cells = axis_breaks
            .iter()
            .map(|b| b.len() - 1)
            .try_fold(1usize, |acc, c| acc.checked_mul(c))
            .unwrap_or(usize::MAX);
        if cells > MAX_GRID_CELLS {
            return Err(Error::GridTooLarge {
                coords: u.to_string(),
                cells,
                limit: MAX_GRID_CELLS,
            });
        }
        let mut comp = GridComponent::zeros(u.clone(), axis_breaks);
        for family in model.families() {
            let Some(tree) = family.tree(&u) else { continue };
            for leaf in tree.leaves() {
                let ranges: Vec<(usize, usize)> = comp
                    .axis_breaks
                    .iter()
                    .enumerate()
                    .map(|(p, breaks)| {
                        let lo = breaks.partition_point(|&b| b <= leaf.region.lower()[p]).saturating_sub(1);
                        let hi = breaks.partition_point(|&b| b <= leaf.region.upper()[p]).saturating_sub(1);
                        (lo, hi.max(lo))
                    })
                    .collect();
                let add = leaf.value * scale;
                comp.values
                    .slice_each_axis_mut(|ax| {
                        let (lo, hi) = ranges[ax.axis.index()];
                        Slice::from(lo..hi)
                    })
                    .mapv_inplace(|v| v + add);
            }
        }
        out.insert(u, comp);
    }
    Ok(out)
}

fn nonempty_subsets(coords: &CoordSet) -> Vec<CoordSet> {
    let items = coords.as_slice();
    (1u64..(1 << items.len()))
        .map(|mask| {
            CoordSet::new(
                items
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask & (1 << i) != 0)
                    .map(|(_, &k)| k)
                    .collect(),
            )
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct OrderedBound(f64);

impl Eq for OrderedBound {}

impl PartialOrd for OrderedBound {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrderedBound {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Constant plus identified components.
#[derive(Debug, Clone, PartialEq)]
pub struct PurifiedModel {
    pub constant: f64,
    pub components: BTreeMap<CoordSet, GridComponent>,
    /// Sweeps used to reach the fixed point.
    pub sweeps: usize,
}

/// Purifies flattened components (see [`flatten`]).
pub fn purify(components: BTreeMap<CoordSet, GridComponent>) -> Result<PurifiedModel> {
    purify_with_constant(0.0, components)
}

/// [`purify`] starting from an existing constant.
///
/// Each sweep visits components from the highest order down; for every axis
/// it subtracts the weighted mean along that axis and adds it to the
/// component without that coordinate (or to the constant). Sweeps stop once
/// the largest moved mean is below `1e-12` relative to the largest value.
pub fn purify_with_constant(constant: f64, mut components: BTreeMap<CoordSet, GridComponent>) -> Result<PurifiedModel> {
    check_alignment(&components)?;
    let mut constant = constant;
    let mut order: Vec<CoordSet> = components.keys().cloned().collect();
    order.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));

    for sweep in 1..=MAX_SWEEPS {
        let scale = components
            .values()
            .flat_map(|c| c.values.iter())
            .fold(constant.abs(), |m, v| m.max(v.abs()))
            .max(1.0);
        let mut moved: f64 = 0.0;
        for u in &order {
            for (axis, k) in u.iter().enumerate() {
                let comp = components.get_mut(u).expect("component");
                let mean = comp.axis_mean(axis);
                moved = mean.iter().fold(moved, |m, v| m.max(v.abs()));
                comp.values -= &mean.clone().insert_axis(Axis(axis));
                if u.len() == 1 {
                    constant += mean.iter().sum::<f64>();
                    continue;
                }
                let source_breaks: Vec<Vec<f64>> = comp
                    .axis_breaks
                    .iter()
                    .enumerate()
                    .filter(|&(a, _)| a != axis)
                    .map(|(_, b)| b.clone())
                    .collect();
                let target = components.get_mut(&u.without(k)).expect("subset component");
                add_refined(target, &mean, &source_breaks);
            }
        }
        if moved <= 1e-12 * scale {
            return Ok(PurifiedModel {
                constant,
                components,
                sweeps: sweep,
            });
        }
    }
    Err(Error::NonConvergence(MAX_SWEEPS))
}

/// Adds `source` (on the grid `source_breaks`) to `target`, whose grid refines it.
fn add_refined(target: &mut GridComponent, source: &ArrayD<f64>, source_breaks: &[Vec<f64>]) {
    let maps: Vec<Vec<usize>> = target
        .axis_breaks
        .iter()
        .zip(source_breaks)
        .map(|(tb, sb)| {
            tb.windows(2)
                .map(|cell| locate(sb, cell[1]))
                .collect()
        })
        .collect();
    let mut idx = vec![0usize; maps.len()];
    for (cell, v) in target.values.indexed_iter_mut() {
        for (a, m) in maps.iter().enumerate() {
            idx[a] = m[cell[a]];
        }
        *v += source[IxDyn(&idx)];
    }
}

fn check_alignment(components: &BTreeMap<CoordSet, GridComponent>) -> Result<()> {
    for (u, comp) in components {
        if comp.coords != *u || comp.axis_breaks.len() != u.len() {
            return Err(Error::InvalidData(format!("component {u} is malformed")));
        }
        for b in &comp.axis_breaks {
            let ordered = b.len() >= 2 && b[0] <= b[1] && b[1..].windows(2).all(|w| w[0] < w[1]);
            if !ordered || b[0] == b[b.len() - 1] {
                return Err(Error::InvalidData(format!("component {u} has unsorted breaks")));
            }
        }
        if u.len() < 2 {
            continue;
        }
        for k in u.iter() {
            let sub = u.without(k);
            let lower = components
                .get(&sub)
                .ok_or_else(|| Error::InvalidData(format!("component {sub} missing below {u}")))?;
            for (a, c) in sub.iter().enumerate() {
                let coarse = &comp.axis_breaks[u.position(c).expect("member")];
                let fine = &lower.axis_breaks[a];
                let refines = fine.first() == coarse.first()
                    && fine.last() == coarse.last()
                    && (coarse[0] < coarse[1] || fine[0] == fine[1])
                    && coarse.iter().all(|b| fine.binary_search_by(|f| f.total_cmp(b)).is_ok());
                if !refines {
                    return Err(Error::InvalidData(format!("grid of {sub} does not refine {u}")));
                }
            }
        }
    }
    Ok(())
}

impl PurifiedModel {
    /// Constant plus every component at the full `d`-vector `x`.
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.constant + self.components.values().map(|c| c.value_at(x)).sum::<f64>()
    }

    /// Largest absolute axis mean over all components, axes and slices.
    pub fn max_constraint_violation(&self) -> f64 {
        self.components
            .values()
            .flat_map(|c| (0..c.coords.len()).map(move |a| c.axis_mean(a)))
            .flat_map(|m| m.into_iter())
            .fold(0.0, |m: f64, v| m.max(v.abs()))
    }

    /// Runs purification again on the already purified components.
    pub fn repurify(&self) -> Result<Self> {
        purify_with_constant(self.constant, self.components.clone())
    }

    pub fn max_order(&self) -> usize {
        self.components.keys().map(CoordSet::len).max().unwrap_or(0)
    }

    /// Writes the constant and every component of order at most `max_order`
    /// as CSV rows, one per grid cell.
    pub fn write_csv<W: Write>(&self, writer: W, max_order: usize, names: Option<&[String]>) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(["component", "axis1_lower", "axis1_upper", "axis2_lower", "axis2_upper", "value"])?;
        out.write_record(["constant", "", "", "", "", &fmt_f64(self.constant)])?;
        for (u, comp) in self.components.iter().filter(|(u, _)| u.len() <= max_order) {
            let label = component_label(u, names);
            for (cell, v) in comp.values.indexed_iter() {
                let mut row = vec![label.clone()];
                for a in 0..2 {
                    if a < u.len() {
                        let b = &comp.axis_breaks[a];
                        row.push(fmt_f64(b[cell[a]]));
                        row.push(fmt_f64(b[cell[a] + 1]));
                    } else {
                        row.extend([String::new(), String::new()]);
                    }
                }
                row.push(fmt_f64(*v));
                out.write_record(&row)?;
            }
        }
        out.flush()?;
        Ok(())
    }

    /// Like [`PurifiedModel::write_csv`] but evaluates each component at
    /// `points` equispaced values per axis; lower and upper columns both hold
    /// the evaluation coordinate.
    pub fn write_grid_csv<W: Write>(
        &self,
        writer: W,
        max_order: usize,
        points: usize,
        names: Option<&[String]>,
    ) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(["component", "axis1_lower", "axis1_upper", "axis2_lower", "axis2_upper", "value"])?;
        out.write_record(["constant", "", "", "", "", &fmt_f64(self.constant)])?;
        let d = self.components.keys().flat_map(|u| u.iter()).max().map_or(0, |k| k + 1);
        for (u, comp) in self.components.iter().filter(|(u, _)| u.len() <= max_order && u.len() <= 2) {
            let label = component_label(u, names);
            let axes: Vec<Vec<f64>> = comp
                .axis_breaks
                .iter()
                .map(|b| {
                    let (lo, hi) = (b[0], b[b.len() - 1]);
                    (0..points)
                        .map(|i| if points == 1 { (lo + hi) / 2.0 } else { lo + (hi - lo) * i as f64 / (points - 1) as f64 })
                        .collect()
                })
                .collect();
            let mut x = vec![0.0; d];
            let first = &axes[0];
            let second = axes.get(1).cloned().unwrap_or_else(|| vec![f64::NAN]);
            for &a in first {
                for &b in &second {
                    x[u.as_slice()[0]] = a;
                    let mut row = vec![label.clone(), fmt_f64(a), fmt_f64(a)];
                    if u.len() == 2 {
                        x[u.as_slice()[1]] = b;
                        row.extend([fmt_f64(b), fmt_f64(b)]);
                    } else {
                        row.extend([String::new(), String::new()]);
                    }
                    row.push(fmt_f64(comp.value_at(&x)));
                    out.write_record(&row)?;
                }
            }
        }
        out.flush()?;
        Ok(())
    }
}

fn component_label(u: &CoordSet, names: Option<&[String]>) -> String {
    match names {
        Some(names) => u.iter().map(|k| names[k].as_str()).collect::<Vec<_>>().join(":"),
        None => u.to_string(),
    }
}

fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

/// Flattens `model` over its training ranges and purifies the result.
pub fn purify_model(model: &ForestModel) -> Result<PurifiedModel> {
    purify(flatten(model, model.feature_ranges())?)
}
