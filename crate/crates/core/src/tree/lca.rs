/// Euler tour with a sparse table over tour depths.
///
/// `O(m log m)` preprocessing for a tree of `m` nodes, `O(1)` per query.
#[derive(Debug, Clone)]
pub(crate) struct LcaIndex {
    tour: Vec<u32>,
    depth: Vec<u32>,
    first: Vec<u32>,
    // table[k][i] = tour position of the shallowest node in tour[i .. i + 2^k]
    table: Vec<Vec<u32>>,
}

impl LcaIndex {
    /// `children[v]` lists the children of node `v`; `root` is the tree root.
    pub(crate) fn build(children: &[Vec<usize>], root: usize) -> Self {
        let m = children.len();
        let mut tour = Vec::with_capacity(2 * m);
        let mut depth = Vec::with_capacity(2 * m);
        let mut first = vec![u32::MAX; m];

        // (node, depth, index of next child to visit)
        let mut stack: Vec<(usize, u32, usize)> = vec![(root, 0, 0)];
        while let Some(top) = stack.last_mut() {
            let (node, d, next) = *top;
            if next == 0 {
                first[node] = tour.len() as u32;
            }
            tour.push(node as u32);
            depth.push(d);
            match children[node].get(next) {
                Some(&child) => {
                    top.2 += 1;
                    stack.push((child, d + 1, 0));
                }
                None => {
                    stack.pop();
                }
            }
        }

        let len = tour.len();
        let mut table = vec![(0..len as u32).collect::<Vec<u32>>()];
        let mut k = 1;
        while (1usize << k) <= len {
            let prev = &table[k - 1];
            let half = 1usize << (k - 1);
            let row: Vec<u32> = (0..=len - (1 << k))
                .map(|i| {
                    let a = prev[i];
                    let b = prev[i + half];
                    if depth[b as usize] < depth[a as usize] {
                        b
                    } else {
                        a
                    }
                })
                .collect();
            table.push(row);
            k += 1;
        }

        LcaIndex {
            tour,
            depth,
            first,
            table,
        }
    }

    pub(crate) fn query(&self, a: usize, b: usize) -> usize {
        let (mut l, mut r) = (self.first[a] as usize, self.first[b] as usize);
        if l > r {
            std::mem::swap(&mut l, &mut r);
        }
        let span = r - l + 1;
        let k = usize::BITS as usize - 1 - span.leading_zeros() as usize;
        let x = self.table[k][l];
        let y = self.table[k][r + 1 - (1 << k)];
        let pos = if self.depth[y as usize] < self.depth[x as usize] {
            y
        } else {
            x
        };
        self.tour[pos as usize] as usize
    }
}
