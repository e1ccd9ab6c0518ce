//! Canonical subset enumeration: ascending size, lexicographic within a size.

/// Calls `f` on every `k`-subset of `items` in lexicographic order (by position)
/// until it returns `true`. Returns whether enumeration was stopped early.
pub fn for_each_subset(items: &[usize], k: usize, mut f: impl FnMut(&[usize]) -> bool) -> bool {
    let n = items.len();
    if k > n {
        return false;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    let mut buf: Vec<usize> = idx.iter().map(|&i| items[i]).collect();
    loop {
        if f(&buf) {
            return true;
        }
        // advance to next combination
        let mut pos = k;
        loop {
            if pos == 0 {
                return false;
            }
            pos -= 1;
            if idx[pos] != pos + n - k {
                break;
            }
            if pos == 0 {
                return false;
            }
        }
        idx[pos] += 1;
        for q in pos + 1..k {
            idx[q] = idx[q - 1] + 1;
        }
        for q in pos..k {
            buf[q] = items[idx[q]];
        }
    }
}
