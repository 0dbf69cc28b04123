use crate::raster::{check_grids, Raster, RasterError, SemanticMask};
use crate::taxonomy::ClassId;

/// Relabels IGNORE every 4-connected vehicle component of `gt` that holds
/// fewer than `min_returns` LiDAR returns in total.
pub fn restrict_vehicles_to_visible(gt: &SemanticMask, counts: &Raster<u32>, min_returns: u64) -> Result<SemanticMask, RasterError> {
    check_grids(gt.grid(), counts.grid())?;
    let n = gt.grid().size_px();
    let labels = gt.data();
    let mut out = labels.to_vec();
    let mut seen = vec![false; labels.len()];
    let mut component = Vec::new();
    let mut stack = Vec::new();
    for start in 0..labels.len() {
        if seen[start] || labels[start] != ClassId::VEHICLE {
            continue;
        }
        component.clear();
        stack.push(start);
        seen[start] = true;
        while let Some(i) = stack.pop() {
            component.push(i);
            let (r, c) = (i / n, i % n);
            let neighbors = [
                (r > 0).then(|| i - n),
                (r + 1 < n).then(|| i + n),
                (c > 0).then(|| i - 1),
                (c + 1 < n).then(|| i + 1),
            ];
            for j in neighbors.into_iter().flatten() {
                if !seen[j] && labels[j] == ClassId::VEHICLE {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        let returns: u64 = component.iter().map(|&i| counts.data()[i] as u64).sum();
        if returns < min_returns {
            for &i in &component {
                out[i] = ClassId::IGNORE;
            }
        }
    }
    Raster::from_vec(*gt.grid(), out)
}
