use crate::syntax::DepSentence;

/// Ordered labeled tree stored in left-to-right postorder; the root is last.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledTree {
    labels: Vec<String>,
    children: Vec<Vec<usize>>,
}

impl LabeledTree {
    pub fn leaf(label: impl Into<String>) -> Self {
        LabeledTree::node(label, Vec::new())
    }

    /// Root `label` over `kids`, left to right.
    pub fn node(label: impl Into<String>, kids: Vec<LabeledTree>) -> Self {
        let mut labels = Vec::new();
        let mut children = Vec::new();
        let mut roots = Vec::with_capacity(kids.len());
        for kid in kids {
            let offset = labels.len();
            roots.push(offset + kid.labels.len() - 1);
            labels.extend(kid.labels);
            children.extend(
                kid.children
                    .into_iter()
                    .map(|cs| cs.into_iter().map(|c| c + offset).collect()),
            );
        }
        labels.push(label.into());
        children.push(roots);
        LabeledTree { labels, children }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn root(&self) -> usize {
        self.labels.len() - 1
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn children(&self, i: usize) -> &[usize] {
        &self.children[i]
    }

    /// Postorder index of the leftmost leaf under each node.
    fn leftmost_leaves(&self) -> Vec<usize> {
        let mut l = vec![0; self.len()];
        for i in 0..self.len() {
            l[i] = match self.children[i].first() {
                Some(&c) => l[c],
                None => i,
            };
        }
        l
    }

    /// The highest node for each distinct leftmost leaf, in postorder.
    fn keyroots(lml: &[usize]) -> Vec<usize> {
        let n = lml.len();
        (0..n)
            .filter(|&i| !(i + 1..n).any(|j| lml[j] == lml[i]))
            .collect()
    }

    /// Bracket notation, e.g. `VERB(PRON AUX NOUN(DET))`.
    pub fn to_brackets(&self) -> String {
        fn go(t: &LabeledTree, i: usize, out: &mut String) {
            out.push_str(&t.labels[i]);
            if !t.children[i].is_empty() {
                out.push('(');
                for (k, &c) in t.children[i].iter().enumerate() {
                    if k > 0 {
                        out.push(' ');
                    }
                    go(t, c, out);
                }
                out.push(')');
            }
        }
        let mut out = String::new();
        if !self.is_empty() {
            go(self, self.root(), &mut out);
        }
        out
    }
}

/// Dependency tree of a sentence with UPOS labels, children in surface order.
pub fn sentence_tree(sent: &DepSentence) -> LabeledTree {
    fn build(sent: &DepSentence, i: usize) -> LabeledTree {
        let kids = sent
            .children(i)
            .expect("index from the sentence itself")
            .iter()
            .map(|&c| build(sent, c))
            .collect();
        LabeledTree::node(sent.tokens()[i - 1].upos.clone(), kids)
    }
    build(sent, sent.root())
}

/// Unit-cost ordered tree edit distance (Zhang and Shasha).
pub fn tree_edit_distance(t1: &LabeledTree, t2: &LabeledTree) -> usize {
    if t1.is_empty() || t2.is_empty() {
        return t1.len().max(t2.len());
    }
    let (l1, l2) = (t1.leftmost_leaves(), t2.leftmost_leaves());
    let (k1, k2) = (LabeledTree::keyroots(&l1), LabeledTree::keyroots(&l2));
    let (n, m) = (t1.len(), t2.len());
    let mut td = vec![vec![0usize; m]; n];
    let mut fd = vec![vec![0usize; m + 1]; n + 1];

    for &i in &k1 {
        for &j in &k2 {
            let (li, lj) = (l1[i], l2[j]);
            // fd[x][y]: forest l1[i]..x-1 vs l2[j]..y-1, offsets relative to li/lj
            let rows = i - li + 2;
            let cols = j - lj + 2;
            fd[0][0] = 0;
            for x in 1..rows {
                fd[x][0] = fd[x - 1][0] + 1;
            }
            for y in 1..cols {
                fd[0][y] = fd[0][y - 1] + 1;
            }
            for x in 1..rows {
                let a = li + x - 1;
                for y in 1..cols {
                    let b = lj + y - 1;
                    let delete = fd[x - 1][y] + 1;
                    let insert = fd[x][y - 1] + 1;
                    if l1[a] == li && l2[b] == lj {
                        let relabel = fd[x - 1][y - 1] + usize::from(t1.labels[a] != t2.labels[b]);
                        fd[x][y] = delete.min(insert).min(relabel);
                        td[a][b] = fd[x][y];
                    } else {
                        let px = l1[a] - li;
                        let py = l2[b] - lj;
                        fd[x][y] = delete.min(insert).min(fd[px][py] + td[a][b]);
                    }
                }
            }
        }
    }
    td[n - 1][m - 1]
}

/// Distance divided by the larger tree size.
pub fn normalized_tree_edit_distance(t1: &LabeledTree, t2: &LabeledTree) -> f64 {
    let longest = t1.len().max(t2.len());
    if longest == 0 {
        return 0.0;
    }
    tree_edit_distance(t1, t2) as f64 / longest as f64
}
