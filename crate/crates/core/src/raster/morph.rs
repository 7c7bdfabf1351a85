use crate::raster::BinaryMask;

/// Erosion by a square of side `2*radius+1`, repeated `iterations` times.
/// Pixels outside the image count as background, so foreground touching the
/// border erodes inward.
pub fn erode(mask: &BinaryMask, radius: usize, iterations: usize) -> BinaryMask {
    assert!(radius >= 1 && iterations >= 1);
    let mut out = mask.clone();
    for _ in 0..iterations {
        out = erode_once(&out, radius);
    }
    out
}

/// Dilation by the same square element. Out-of-image contributes nothing.
pub fn dilate(mask: &BinaryMask, radius: usize, iterations: usize) -> BinaryMask {
    assert!(radius >= 1 && iterations >= 1);
    let mut out = mask.clone();
    for _ in 0..iterations {
        out = dilate_once(&out, radius);
    }
    out
}

/// Morphological opening: erode then dilate, same element and count.
pub fn opening(mask: &BinaryMask, radius: usize, iterations: usize) -> BinaryMask {
    dilate(&erode(mask, radius, iterations), radius, iterations)
}

// The square element separates into a horizontal and a vertical run, which
// turns the O(r^2) window scan into two O(r) scans with identical output.

fn erode_once(mask: &BinaryMask, radius: usize) -> BinaryMask {
    let (w, h) = (mask.width(), mask.height());
    let r = radius as isize;
    let mut tmp = BinaryMask::new(w, h);
    for y in 0..h {
        'px: for x in 0..w {
            let x = x as isize;
            if x - r < 0 || x + r >= w as isize {
                continue; // window leaves the image: background wins
            }
            for dx in -r..=r {
                if !mask.get((x + dx) as usize, y) {
                    continue 'px;
                }
            }
            tmp.set(x as usize, y, true);
        }
    }
    let mut out = BinaryMask::new(w, h);
    for y in 0..h {
        'px: for x in 0..w {
            let y = y as isize;
            if y - r < 0 || y + r >= h as isize {
                continue;
            }
            for dy in -r..=r {
                if !tmp.get(x, (y + dy) as usize) {
                    continue 'px;
                }
            }
            out.set(x, y as usize, true);
        }
    }
    out
}

fn dilate_once(mask: &BinaryMask, radius: usize) -> BinaryMask {
    let (w, h) = (mask.width(), mask.height());
    let r = radius as isize;
    let mut tmp = BinaryMask::new(w, h);
    for y in 0..h {
        for x in 0..w {
            let lo = (x as isize - r).max(0) as usize;
            let hi = ((x as isize + r) as usize).min(w - 1);
            let mut any = false;
            for sx in lo..=hi {
                if mask.get(sx, y) {
                    any = true;
                    break;
                }
            }
            tmp.set(x, y, any);
        }
    }
    let mut out = BinaryMask::new(w, h);
    for y in 0..h {
        for x in 0..w {
            let lo = (y as isize - r).max(0) as usize;
            let hi = ((y as isize + r) as usize).min(h - 1);
            let mut any = false;
            for sy in lo..=hi {
                if tmp.get(x, sy) {
                    any = true;
                    break;
                }
            }
            out.set(x, y, any);
        }
    }
    out
}
