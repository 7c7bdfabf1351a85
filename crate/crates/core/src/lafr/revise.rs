use crate::error::{Error, Result};
use crate::lafr::{EdgeAssignment, LafrParams, RevisionResult, RevisionStats, WindowInstance};
use crate::raster::LabelMask;

/// Apply the revision step: for every anchor whose assignment integrated a
/// rectangle, repaint the original component with the modal class of its
/// one-pixel outer boundary ring (window class excluded), then stamp the
/// integrated rectangle back in as window. Anchors are processed in
/// ascending anchor id on the evolving mask, so later fills win overlaps;
/// anchors without a rectangle leave the mask untouched.
pub fn revise(
    mask: &LabelMask,
    instances: &[WindowInstance],
    assignments: &[EdgeAssignment],
    params: &LafrParams,
) -> Result<RevisionResult> {
    params.validate()?;
    if instances.len() != assignments.len() {
        return Err(Error::InvalidParam(format!(
            "{} instances but {} assignments",
            instances.len(),
            assignments.len()
        )));
    }
    if params.window_class as usize >= mask.classes() {
        return Err(Error::UnknownWindowClass(format!(
            "index {} with only {} classes",
            params.window_class,
            mask.classes()
        )));
    }
    if let Some(rc) = params.replacement_class {
        if rc as usize >= mask.classes() {
            return Err(Error::ClassOutOfRange {
                value: rc,
                classes: mask.classes(),
            });
        }
    }

    let (w, h) = (mask.width(), mask.height());
    let mut revised = mask.clone();
    let mut stats = RevisionStats {
        anchors_total: instances.len(),
        ..RevisionStats::default()
    };

    let mut order: Vec<usize> = (0..instances.len()).collect();
    order.sort_by_key(|&i| assignments[i].anchor_id);

    // scratch for membership tests, cleared per anchor
    let mut member = vec![false; w * h];
    let mut filled = vec![false; w * h];

    for i in order {
        let instance = &instances[i];
        let assignment = &assignments[i];
        let Some(rect) = assignment.integrated else {
            stats.anchors_discarded += 1;
            continue;
        };

        for &(x, y) in &instance.component.pixels {
            member[y as usize * w + x as usize] = true;
        }

        // modal class of the 8-connected outer boundary ring
        let mut counts = [0u64; 256];
        for &(x, y) in &instance.component.pixels {
            let (x, y) = (x as isize, y as isize);
            for dy in -1..=1isize {
                for dx in -1..=1isize {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                        continue;
                    }
                    let ni = ny as usize * w + nx as usize;
                    if member[ni] {
                        continue;
                    }
                    counts[revised.data()[ni] as usize] += 1;
                }
            }
        }
        // a ring pixel adjacent to several members is counted once per
        // adjacency; that only reinforces the locally dominant class
        counts[params.window_class as usize] = 0;
        let modal = counts
            .iter()
            .enumerate()
            .filter(|&(_, &n)| n > 0)
            .max_by_key(|&(class, &n)| (n, std::cmp::Reverse(class)))
            .map(|(class, _)| class as u8)
            .or(params.replacement_class)
            .unwrap_or(0);

        for &(x, y) in &instance.component.pixels {
            let idx = y as usize * w + x as usize;
            member[idx] = false;
            revised.set(x as usize, y as usize, modal);
        }

        // stamp the integrated rectangle, clamped to the mask; a pixel is
        // inside when its center is, so half-integer edges from detected
        // lines do not bleed one row past the frame
        let y0 = rect.top.ceil().max(0.0) as usize;
        let y1 = (rect.bottom.floor() as isize).min(h as isize - 1);
        let x0 = rect.left.ceil().max(0.0) as usize;
        let x1 = (rect.right.floor() as isize).min(w as isize - 1);
        if y1 >= 0 && x1 >= 0 {
            for y in y0..=y1 as usize {
                for x in x0..=x1 as usize {
                    let idx = y * w + x;
                    if filled[idx] {
                        stats.overlap_pixels += 1;
                    } else {
                        filled[idx] = true;
                    }
                    revised.set(x, y, params.window_class);
                }
            }
        }
        stats.anchors_revised += 1;
    }

    Ok(RevisionResult {
        revised,
        assignments: assignments.to_vec(),
        stats,
    })
}
