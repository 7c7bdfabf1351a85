use crate::error::{Error, Result};
use crate::lafr::{LafrParams, WindowInstance};
use crate::raster::{connected_components, opening, Connectivity, LabelMask};

/// Extract window anchors from a preliminary mask: binarize the window
/// class, open away speckle and thin bridges, label 4-connected components
/// and keep those at least `min_component_area` pixels large. Ids are dense
/// and follow component discovery order, so the result is deterministic.
pub fn acquire_instances(mask: &LabelMask, params: &LafrParams) -> Result<Vec<WindowInstance>> {
    if params.window_class as usize >= mask.classes() {
        return Err(Error::UnknownWindowClass(format!(
            "index {} with only {} classes",
            params.window_class,
            mask.classes()
        )));
    }
    let windows = mask.class_mask(params.window_class);
    let opened = opening(
        &windows,
        params.morphology.radius,
        params.morphology.iterations,
    );
    let instances = connected_components(&opened, Connectivity::Four)
        .into_iter()
        .filter(|c| c.area() >= params.min_component_area)
        .enumerate()
        .map(|(anchor_id, mut component)| {
            component.id = anchor_id;
            let anchor = component.bounds;
            WindowInstance {
                anchor_id,
                component,
                anchor,
            }
        })
        .collect();
    Ok(instances)
}
