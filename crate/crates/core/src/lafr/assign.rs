use crate::lafr::{Edge, EdgeAssignment, EdgeFill, LafrParams, RectF, WindowInstance};
use crate::lsd::LineSegment;
use crate::raster::PixelRect;

/// Angle gap between a segment and an edge orientation, in [0, pi/2].
/// Segments are undirected, so the gap is taken modulo a half turn.
pub fn edge_angle_gap(segment: &LineSegment, edge: Edge) -> f64 {
    let target = if edge.is_horizontal() {
        0.0
    } else {
        std::f64::consts::FRAC_PI_2
    };
    let mut gap = (segment.angle - target).abs();
    if gap > std::f64::consts::FRAC_PI_2 {
        gap = std::f64::consts::PI - gap;
    }
    gap
}

/// Distance from the segment midpoint to the infinite line through the
/// anchor edge. When `overlap_ratio` is positive, a segment whose projection
/// onto the edge axis overlaps the edge span by less than that fraction of
/// the edge length is gated to infinity: a far-off collinear sill should not
/// claim the edge of an unrelated anchor.
pub fn edge_distance(
    anchor: &PixelRect,
    segment: &LineSegment,
    edge: Edge,
    overlap_ratio: f64,
) -> f64 {
    let (mid_x, mid_y) = segment.midpoint();
    let (span_lo, span_hi, proj_lo, proj_hi, line, mid) = if edge.is_horizontal() {
        let line = match edge {
            Edge::Top => anchor.top,
            _ => anchor.bottom,
        } as f64;
        (
            anchor.left as f64,
            anchor.right as f64,
            segment.x1.min(segment.x2),
            segment.x1.max(segment.x2),
            line,
            mid_y,
        )
    } else {
        let line = match edge {
            Edge::Left => anchor.left,
            _ => anchor.right,
        } as f64;
        (
            anchor.top as f64,
            anchor.bottom as f64,
            segment.y1.min(segment.y2),
            segment.y1.max(segment.y2),
            line,
            mid_x,
        )
    };

    if overlap_ratio > 0.0 {
        let overlap = (proj_hi.min(span_hi) - proj_lo.max(span_lo)).max(0.0);
        if overlap < overlap_ratio * (span_hi - span_lo) {
            return f64::INFINITY;
        }
    }
    (mid - line).abs()
}

/// Fill the four edge slots of one anchor.
///
/// Each segment first picks its orientation class (whichever of the
/// horizontal/vertical gaps is smaller), is dropped if that gap exceeds
/// `theta`, then competes for the nearer edge of the pair; `delta` caps the
/// distance. Per edge the minimum-distance segment wins, ties broken by
/// longer segment, then by lower index. The integrated rectangle is left
/// unset; see [`integrate`].
pub fn assign_segments(
    instance: &WindowInstance,
    segments: &[LineSegment],
    params: &LafrParams,
) -> EdgeAssignment {
    let anchor = instance.anchor;
    let mut edges: [Option<EdgeFill>; 4] = [None; 4];
    let mut slot_len = [0.0f64; 4];

    for (index, segment) in segments.iter().enumerate() {
        if segment.length <= 0.0 {
            continue;
        }
        let horizontal_gap = edge_angle_gap(segment, Edge::Top);
        let vertical_gap = edge_angle_gap(segment, Edge::Left);
        let (gap, pair) = if horizontal_gap <= vertical_gap {
            (horizontal_gap, [Edge::Top, Edge::Bottom])
        } else {
            (vertical_gap, [Edge::Left, Edge::Right])
        };
        if gap > params.theta {
            continue;
        }

        let d0 = edge_distance(&anchor, segment, pair[0], params.overlap_ratio);
        let d1 = edge_distance(&anchor, segment, pair[1], params.overlap_ratio);
        let (edge, distance) = if d0 <= d1 {
            (pair[0], d0)
        } else {
            (pair[1], d1)
        };
        if !(distance <= params.delta) {
            continue;
        }

        let slot = edge as usize;
        let take = match &edges[slot] {
            None => true,
            Some(cur) => {
                distance < cur.distance
                    || (distance == cur.distance && segment.length > slot_len[slot])
            }
        };
        if take {
            edges[slot] = Some(EdgeFill { segment: index, distance });
            slot_len[slot] = segment.length;
        }
    }

    EdgeAssignment {
        anchor_id: instance.anchor_id,
        anchor,
        edges,
        integrated: None,
    }
}

/// Build the revised rectangle from a fully filled assignment: horizontal
/// edges take the mean endpoint y of their segment, vertical edges the mean
/// endpoint x. Returns None when any edge is blank or the result would be
/// degenerate (top not above bottom, left not left of right).
pub fn integrate(assignment: &EdgeAssignment, segments: &[LineSegment]) -> Option<RectF> {
    let coord = |edge: Edge| -> Option<f64> {
        let fill = assignment.edges[edge as usize]?;
        let s = &segments[fill.segment];
        Some(if edge.is_horizontal() {
            (s.y1 + s.y2) / 2.0
        } else {
            (s.x1 + s.x2) / 2.0
        })
    };
    let rect = RectF {
        top: coord(Edge::Top)?,
        bottom: coord(Edge::Bottom)?,
        left: coord(Edge::Left)?,
        right: coord(Edge::Right)?,
    };
    if rect.top >= rect.bottom || rect.left >= rect.right {
        return None;
    }
    Some(rect)
}
