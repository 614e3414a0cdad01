#![allow(dead_code)]

use std::collections::{HashMap, VecDeque};
use std::path::PathBuf;

use negforge::eval::LabeledTree;
use negforge::{DepSentence, Token};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn demo_corpus() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/demo.conllu")
}

/// Full-table edit distance, filled cell by cell from the definition.
pub fn edit_oracle<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for (j, cell) in d[0].iter_mut().enumerate() {
        *cell = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let cost = if a[i - 1] == b[j - 1] { 0 } else { 1 };
            d[i][j] = (d[i - 1][j] + 1).min(d[i][j - 1] + 1).min(d[i - 1][j - 1] + cost);
        }
    }
    d[a.len()][b.len()]
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Node {
    pub label: u8,
    pub kids: Vec<Node>,
}

pub type Forest = Vec<Node>;

fn size(f: &[Node]) -> usize {
    f.iter().map(|n| 1 + size(&n.kids)).sum()
}

pub fn to_labeled(n: &Node) -> LabeledTree {
    LabeledTree::node(
        ((b'a' + n.label) as char).to_string(),
        n.kids.iter().map(to_labeled).collect(),
    )
}

/// Every ordered tree with exactly `n` nodes over `labels` labels.
pub fn trees_of_size(n: usize, labels: u8) -> Vec<Node> {
    let mut out = Vec::new();
    for kids in forests_of_size(n - 1, labels) {
        for label in 0..labels {
            out.push(Node {
                label,
                kids: kids.clone(),
            });
        }
    }
    out
}

pub fn forests_of_size(n: usize, labels: u8) -> Vec<Forest> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for first in 1..=n {
        for t in trees_of_size(first, labels) {
            for rest in forests_of_size(n - first, labels) {
                let mut f = vec![t.clone()];
                f.extend(rest);
                out.push(f);
            }
        }
    }
    out
}

/// Forests one unit edit away: relabel a node, delete a node (its children
/// move up into its place), or insert a node over a run of siblings.
fn neighbours(list: &[Node], labels: u8, max_nodes: usize, total: usize) -> Vec<Forest> {
    let mut out = Vec::new();
    for i in 0..list.len() {
        for l in 0..labels {
            if l != list[i].label {
                let mut f = list.to_vec();
                f[i].label = l;
                out.push(f);
            }
        }
        let mut f = list[..i].to_vec();
        f.extend(list[i].kids.iter().cloned());
        f.extend(list[i + 1..].iter().cloned());
        out.push(f);
        for kids in neighbours(&list[i].kids, labels, max_nodes, total) {
            let mut f = list.to_vec();
            f[i].kids = kids;
            out.push(f);
        }
    }
    if total < max_nodes {
        for i in 0..=list.len() {
            for j in i..=list.len() {
                for label in 0..labels {
                    let mut f = list[..i].to_vec();
                    f.push(Node {
                        label,
                        kids: list[i..j].to_vec(),
                    });
                    f.extend(list[j..].iter().cloned());
                    out.push(f);
                }
            }
        }
    }
    out
}

/// Shortest edit script length between forests, searched breadth first over
/// forests of at most `max_nodes` nodes. Scripts that delete before they
/// insert never exceed the larger input, so the bound loses nothing.
pub struct ScriptSearch {
    labels: u8,
    max_nodes: usize,
    cache: HashMap<Forest, HashMap<Forest, usize>>,
}

impl ScriptSearch {
    pub fn new(labels: u8, max_nodes: usize) -> Self {
        ScriptSearch {
            labels,
            max_nodes,
            cache: HashMap::new(),
        }
    }

    pub fn distance(&mut self, a: &Node, b: &Node) -> usize {
        let src = vec![a.clone()];
        let dst = vec![b.clone()];
        if !self.cache.contains_key(&src) {
            let all = self.bfs(&src);
            self.cache.insert(src.clone(), all);
        }
        self.cache[&src][&dst]
    }

    fn bfs(&self, src: &Forest) -> HashMap<Forest, usize> {
        let mut dist = HashMap::new();
        dist.insert(src.clone(), 0);
        let mut queue = VecDeque::from([src.clone()]);
        while let Some(f) = queue.pop_front() {
            let d = dist[&f];
            for g in neighbours(&f, self.labels, self.max_nodes, size(&f)) {
                if !dist.contains_key(&g) {
                    dist.insert(g.clone(), d + 1);
                    queue.push_back(g);
                }
            }
        }
        dist
    }
}

pub fn random_tree<R: Rng>(rng: &mut R, n: usize, labels: u8) -> Node {
    // parent[i] < i gives a preorder-style random ordered tree
    let mut kids: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 1..n {
        let p = rng.random_range(0..i);
        kids[p].push(i);
    }
    fn build<R: Rng>(i: usize, kids: &[Vec<usize>], rng: &mut R, labels: u8) -> Node {
        Node {
            label: rng.random_range(0..labels),
            kids: kids[i].iter().map(|&k| build(k, kids, rng, labels)).collect(),
        }
    }
    build(0, &kids, rng, labels)
}

const UPOS: &[&str] = &["VERB", "AUX", "DET", "NOUN", "PRON", "ADV", "ADJ", "ADP", "PUNCT", "PROPN", "CCONJ"];
const DEPREL: &[&str] = &[
    "root", "nsubj", "obj", "iobj", "det", "advmod", "amod", "case", "prep", "punct", "obl", "nsubj:pass", "conj",
    "cc", "aux", "compound",
];
const WORDS: &[&str] = &[
    "the", "a", "cat", "They", "were", "cooking", "dinner", ",", ".", "!", "n't", "'s", "über", "café", "on",
    "quickly", "red", "at", "and", "It", "(", ")", "\"", "x-ray", "3.5",
];

/// A random valid dependency tree with random tags and spacing.
pub fn random_sentence<R: Rng>(rng: &mut R, id: usize) -> DepSentence {
    let n = rng.random_range(1..=14);
    let mut order: Vec<usize> = (1..=n).collect();
    order.shuffle(rng);
    let mut heads = vec![0usize; n + 1];
    for k in 1..order.len() {
        heads[order[k]] = order[rng.random_range(0..k)];
    }
    let tokens = (1..=n)
        .map(|i| Token {
            index: i,
            surface: WORDS.choose(rng).unwrap().to_string(),
            upos: UPOS.choose(rng).unwrap().to_string(),
            deprel: if heads[i] == 0 {
                "root".to_string()
            } else {
                DEPREL.choose(rng).unwrap().to_string()
            },
            head: heads[i],
            space_after: rng.random_bool(0.8),
        })
        .collect();
    DepSentence::new(format!("fuzz-{id}"), tokens, None).expect("generated tree is valid")
}
