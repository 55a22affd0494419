//! Stable merge sort returning a permutation, mirroring the in-PE merge
//! network: bottom-up passes over runs of doubling width.

/// Sort `keys` ascending and return the permutation: `perm[i]` is the input
/// index of the i-th smallest key. Equal keys keep their input order.
pub fn patch_sort(keys: &[f64]) -> Vec<u32> {
    let n = keys.len();
    let mut perm: Vec<u32> = (0..n as u32).collect();
    if n < 2 {
        return perm;
    }
    let mut scratch = vec![0u32; n];
    let mut width = 1;
    while width < n {
        let mut start = 0;
        while start < n {
            let mid = (start + width).min(n);
            let end = (start + 2 * width).min(n);
            merge(
                &perm[start..mid],
                &perm[mid..end],
                keys,
                &mut scratch[start..end],
            );
            start = end;
        }
        perm.copy_from_slice(&scratch);
        width *= 2;
    }
    perm
}

fn merge(left: &[u32], right: &[u32], keys: &[f64], out: &mut [u32]) {
    let (mut i, mut j, mut k) = (0, 0, 0);
    while i < left.len() && j < right.len() {
        // `<=` keeps the left (earlier) element on ties: stability.
        if keys[left[i] as usize] <= keys[right[j] as usize] {
            out[k] = left[i];
            i += 1;
        } else {
            out[k] = right[j];
            j += 1;
        }
        k += 1;
    }
    out[k..k + left.len() - i].copy_from_slice(&left[i..]);
    k += left.len() - i;
    out[k..k + right.len() - j].copy_from_slice(&right[j..]);
}
