use crate::raster::{BinaryMask, ConnectedComponent, PixelRect};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Connectivity {
    Four,
    Eight,
}

/// Label foreground regions with two-pass union-find.
///
/// Component ids count up in order of each region's first row-major pixel,
/// and the pixel lists come out in row-major order, so the result is a pure
/// function of the mask.
pub fn connected_components(mask: &BinaryMask, connectivity: Connectivity) -> Vec<ConnectedComponent> {
    let (w, h) = (mask.width(), mask.height());
    if w == 0 || h == 0 {
        return Vec::new();
    }

    let mut labels = vec![0u32; w * h]; // 0 = background, else label+1
    let mut parent: Vec<u32> = vec![0]; // parent[0] unused
    let mut next = 1u32;

    for y in 0..h {
        for x in 0..w {
            if !mask.get(x, y) {
                continue;
            }
            let mut neighbor = 0u32;
            let mut consider = |lbl: u32, parent: &mut Vec<u32>| {
                if lbl != 0 {
                    if neighbor == 0 {
                        neighbor = lbl;
                    } else if find(parent, lbl) != find(parent, neighbor) {
                        union(parent, lbl, neighbor);
                    }
                }
            };
            if x > 0 {
                consider(labels[y * w + x - 1], &mut parent);
            }
            if y > 0 {
                consider(labels[(y - 1) * w + x], &mut parent);
                if connectivity == Connectivity::Eight {
                    if x > 0 {
                        consider(labels[(y - 1) * w + x - 1], &mut parent);
                    }
                    if x + 1 < w {
                        consider(labels[(y - 1) * w + x + 1], &mut parent);
                    }
                }
            }
            if neighbor == 0 {
                parent.push(next);
                labels[y * w + x] = next;
                next += 1;
            } else {
                labels[y * w + x] = find(&mut parent, neighbor);
            }
        }
    }

    // second pass: roots -> dense ids in first-pixel order
    let mut id_of_root = vec![u32::MAX; parent.len()];
    let mut comps: Vec<ConnectedComponent> = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let lbl = labels[y * w + x];
            if lbl == 0 {
                continue;
            }
            let root = find(&mut parent, lbl);
            let id = if id_of_root[root as usize] == u32::MAX {
                let id = comps.len() as u32;
                id_of_root[root as usize] = id;
                comps.push(ConnectedComponent {
                    id: id as usize,
                    pixels: Vec::new(),
                    bounds: PixelRect {
                        top: y,
                        bottom: y,
                        left: x,
                        right: x,
                    },
                });
                id
            } else {
                id_of_root[root as usize]
            };
            let comp = &mut comps[id as usize];
            comp.pixels.push((x as u32, y as u32));
            let b = &mut comp.bounds;
            b.top = b.top.min(y);
            b.bottom = b.bottom.max(y);
            b.left = b.left.min(x);
            b.right = b.right.max(x);
        }
    }
    comps
}

fn find(parent: &mut [u32], mut x: u32) -> u32 {
    while parent[x as usize] != x {
        parent[x as usize] = parent[parent[x as usize] as usize];
        x = parent[x as usize];
    }
    x
}

fn union(parent: &mut [u32], a: u32, b: u32) {
    let (ra, rb) = (find(parent, a), find(parent, b));
    // keep the smaller root so labels stay stable
    if ra < rb {
        parent[rb as usize] = ra;
    } else {
        parent[ra as usize] = rb;
    }
}
