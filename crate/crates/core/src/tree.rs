//! Decision trees with node-specific inverse temperatures.
//!
//! Every internal node `x_<t` carries a kind (action or observation), an
//! inverse temperature `β(x_<t)` and a list of edges; each edge carries the
//! reference probability `Q(x_t|x_<t)` and the reward `R(x_t|x_<t)`. Solving
//! the tree runs the log-partition recursion backwards from the leaves:
//!
//! ```text
//! V(leaf) = 0
//! V(x_<t) = (1/β(x_<t)) log Σ Q(x_t|x_<t) exp{β(x_<t) [R(x_t|x_<t) + V(x_≤t)]}
//! P(x_t|x_<t) ∝ Q(x_t|x_<t) exp{β(x_<t) [R(x_t|x_<t) + V(x_≤t)]}
//! ```
//!
//! Nodes live in an arena where every child has a larger id than its
//! parent, so a reverse sweep over ids is a post-order traversal.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{ProbabilityVector, MASS_TOLERANCE};
use crate::numeric::certainty_equivalent;

pub type NodeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Action,
    Observation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub label: String,
    /// Reference probability `Q(x_t|x_<t)`.
    pub prior: f64,
    pub reward: f64,
    pub child: NodeId,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Leaf,
    Choice {
        kind: NodeKind,
        beta: f64,
        edges: Vec<Edge>,
    },
}

impl Node {
    pub fn edges(&self) -> &[Edge] {
        match self {
            Node::Leaf => &[],
            Node::Choice { edges, .. } => edges,
        }
    }

    pub fn beta(&self) -> Option<f64> {
        match self {
            Node::Leaf => None,
            Node::Choice { beta, .. } => Some(*beta),
        }
    }

    pub fn kind(&self) -> Option<NodeKind> {
        match self {
            Node::Leaf => None,
            Node::Choice { kind, .. } => Some(*kind),
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, Node::Leaf)
    }
}

/// Incrementally builds a [`DecisionTree`]; ids are handed out in creation
/// order, which keeps children after their parents.
#[derive(Debug, Clone)]
pub struct TreeBuilder {
    nodes: Vec<Node>,
}

impl TreeBuilder {
    pub fn new(root_kind: NodeKind, root_beta: f64) -> Self {
        Self {
            nodes: vec![Node::Choice {
                kind: root_kind,
                beta: root_beta,
                edges: Vec::new(),
            }],
        }
    }

    pub fn root(&self) -> NodeId {
        0
    }

    /// Adds an internal child below `parent`.
    pub fn branch(
        &mut self,
        parent: NodeId,
        label: impl Into<String>,
        prior: f64,
        reward: f64,
        kind: NodeKind,
        beta: f64,
    ) -> Result<NodeId> {
        self.attach(
            parent,
            label.into(),
            prior,
            reward,
            Node::Choice {
                kind,
                beta,
                edges: Vec::new(),
            },
        )
    }

    /// Adds a terminal child below `parent`.
    pub fn leaf(
        &mut self,
        parent: NodeId,
        label: impl Into<String>,
        prior: f64,
        reward: f64,
    ) -> Result<NodeId> {
        self.attach(parent, label.into(), prior, reward, Node::Leaf)
    }

    fn attach(
        &mut self,
        parent: NodeId,
        label: String,
        prior: f64,
        reward: f64,
        node: Node,
    ) -> Result<NodeId> {
        let id = self.nodes.len();
        match self.nodes.get_mut(parent) {
            Some(Node::Choice { edges, .. }) => edges.push(Edge {
                label,
                prior,
                reward,
                child: id,
            }),
            Some(Node::Leaf) => {
                return Err(Error::domain(format!(
                    "node {parent} is a leaf and cannot have children"
                )))
            }
            None => return Err(Error::domain(format!("unknown parent node {parent}"))),
        }
        self.nodes.push(node);
        Ok(id)
    }

    pub fn build(self, root_utility: f64) -> Result<DecisionTree> {
        DecisionTree::from_arena(self.nodes, root_utility)
    }
}

/// One root-to-leaf path, as the sequence of `(node, edge index)` steps taken.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Path {
    pub steps: Vec<(NodeId, usize)>,
    pub leaf: NodeId,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    nodes: Vec<Node>,
    parents: Vec<Option<(NodeId, usize)>>,
    depths: Vec<usize>,
    leaves: Vec<NodeId>,
    root_utility: f64,
}

impl DecisionTree {
    /// Validates an arena in which node 0 is the root and each child id
    /// exceeds its parent's.
    pub fn from_arena(nodes: Vec<Node>, root_utility: f64) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::domain("tree has no nodes"));
        }
        if !root_utility.is_finite() {
            return Err(Error::domain("root utility must be finite"));
        }
        let n = nodes.len();
        let mut parents: Vec<Option<(NodeId, usize)>> = vec![None; n];
        let mut depths = vec![0usize; n];
        for (id, node) in nodes.iter().enumerate() {
            if id > 0 && parents[id].is_none() {
                return Err(Error::domain(format!(
                    "node {id} is not reachable from the root"
                )));
            }
            let Node::Choice { beta, edges, .. } = node else {
                continue;
            };
            if *beta == 0.0 || !beta.is_finite() {
                return Err(Error::parameter(format!(
                    "node {id} has inverse temperature {beta}; it must be finite and nonzero"
                )));
            }
            if edges.is_empty() {
                return Err(Error::domain(format!("internal node {id} has no edges")));
            }
            let mut total = 0.0;
            for (k, e) in edges.iter().enumerate() {
                if !(e.prior > 0.0 && e.prior <= 1.0) {
                    return Err(Error::domain(format!(
                        "edge `{}` of node {id} has prior {}; priors must lie in (0, 1]",
                        e.label, e.prior
                    )));
                }
                if !e.reward.is_finite() {
                    return Err(Error::domain(format!(
                        "edge `{}` of node {id} has a non-finite reward",
                        e.label
                    )));
                }
                if e.child <= id || e.child >= n {
                    return Err(Error::domain(format!(
                        "edge `{}` of node {id} points to invalid child {}",
                        e.label, e.child
                    )));
                }
                if parents[e.child].is_some() {
                    return Err(Error::domain(format!(
                        "node {} has more than one parent",
                        e.child
                    )));
                }
                parents[e.child] = Some((id, k));
                depths[e.child] = depths[id] + 1;
                total += e.prior;
            }
            if (total - 1.0).abs() > MASS_TOLERANCE {
                return Err(Error::domain(format!(
                    "priors at node {id} sum to {total}, not 1"
                )));
            }
        }
        if nodes[0].is_leaf() {
            return Err(Error::domain("tree must have depth at least 1"));
        }
        let leaves = preorder(&nodes)
            .into_iter()
            .filter(|&i| nodes[i].is_leaf())
            .collect();
        Ok(Self {
            nodes,
            parents,
            depths,
            leaves,
            root_utility,
        })
    }

    pub fn root(&self) -> NodeId {
        0
    }

    pub fn root_utility(&self) -> f64 {
        self.root_utility
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Parent node and the index of the edge leading here; `None` at the root.
    pub fn parent(&self, id: NodeId) -> Option<(NodeId, usize)> {
        self.parents[id]
    }

    pub fn depth(&self, id: NodeId) -> usize {
        self.depths[id]
    }

    pub fn height(&self) -> usize {
        self.depths.iter().copied().max().unwrap_or(0)
    }

    /// Leaves in depth-first order; path distributions are indexed in this order.
    pub fn leaves(&self) -> &[NodeId] {
        &self.leaves
    }

    pub fn path_to(&self, leaf: NodeId) -> Path {
        let mut steps = Vec::with_capacity(self.depths[leaf]);
        let mut cur = leaf;
        while let Some((p, k)) = self.parents[cur] {
            steps.push((p, k));
            cur = p;
        }
        steps.reverse();
        Path { steps, leaf }
    }

    pub fn paths(&self) -> Vec<Path> {
        self.leaves.iter().map(|&l| self.path_to(l)).collect()
    }

    fn edge(&self, node: NodeId, k: usize) -> &Edge {
        &self.nodes[node].edges()[k]
    }

    fn beta_at(&self, node: NodeId) -> f64 {
        self.nodes[node]
            .beta()
            .expect("steps only visit internal nodes")
    }

    /// Reference probability `Q(x_≤T)` of every leaf.
    pub fn path_priors(&self) -> Vec<f64> {
        self.leaves
            .iter()
            .map(|&l| {
                self.path_to(l)
                    .steps
                    .iter()
                    .map(|&(n, k)| self.edge(n, k).prior)
                    .product()
            })
            .collect()
    }

    /// Same structure, rewards replaced by `rewards[node][edge]`.
    pub fn with_rewards(&self, rewards: &[Vec<f64>]) -> Result<Self> {
        if rewards.len() != self.nodes.len() {
            return Err(Error::domain("reward table does not match the tree"));
        }
        let mut nodes = self.nodes.clone();
        for (id, node) in nodes.iter_mut().enumerate() {
            if let Node::Choice { edges, .. } = node {
                if rewards[id].len() != edges.len() {
                    return Err(Error::domain(format!(
                        "reward row {id} does not match the node's edges"
                    )));
                }
                for (e, &r) in edges.iter_mut().zip(&rewards[id]) {
                    e.reward = r;
                }
            }
        }
        Self::from_arena(nodes, self.root_utility)
    }

    /// Same structure with every inverse temperature replaced.
    pub fn with_betas(&self, beta_for: impl Fn(NodeId, NodeKind, f64) -> f64) -> Result<Self> {
        let mut nodes = self.nodes.clone();
        for (id, node) in nodes.iter_mut().enumerate() {
            if let Node::Choice { kind, beta, .. } = node {
                *beta = beta_for(id, *kind, *beta);
            }
        }
        Self::from_arena(nodes, self.root_utility)
    }

    /// Probability mass below every node under a leaf distribution.
    fn node_masses(&self, path_probs: &[f64]) -> Vec<f64> {
        let mut mass = vec![0.0; self.nodes.len()];
        for (&leaf, &p) in self.leaves.iter().zip(path_probs) {
            mass[leaf] = p;
        }
        for id in (1..self.nodes.len()).rev() {
            let (parent, _) = self.parents[id].expect("non-root node has a parent");
            mass[parent] += mass[id];
        }
        mass
    }

    /// Conditionals `P(x_t|x_<t)` per node and edge, from a distribution over leaves.
    pub fn conditionals(&self, path_probs: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.check_path_distribution(path_probs)?;
        let mass = self.node_masses(path_probs);
        Ok(self
            .nodes
            .iter()
            .enumerate()
            .map(|(id, node)| {
                node.edges()
                    .iter()
                    .map(|e| mass[e.child] / mass[id])
                    .collect()
            })
            .collect())
    }

    fn check_path_distribution(&self, path_probs: &[f64]) -> Result<()> {
        if path_probs.len() != self.leaves.len() {
            return Err(Error::domain(format!(
                "path distribution has {} entries for {} leaves",
                path_probs.len(),
                self.leaves.len()
            )));
        }
        if path_probs.iter().any(|&p| !(p > 0.0 && p.is_finite())) {
            return Err(Error::domain("path distribution must be strictly positive"));
        }
        let total: f64 = path_probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::domain(format!("path distribution sums to {total}")));
        }
        Ok(())
    }

    fn check_utilities(&self, utilities: &[f64]) -> Result<()> {
        if utilities.len() != self.nodes.len() {
            return Err(Error::domain(format!(
                "expected a utility for each of the {} prefixes, got {}",
                self.nodes.len(),
                utilities.len()
            )));
        }
        if let Some(id) = utilities.iter().position(|u| !u.is_finite()) {
            return Err(Error::domain(format!(
                "missing utility for prefix node {id}"
            )));
        }
        Ok(())
    }
}

fn preorder(nodes: &[Node]) -> Vec<NodeId> {
    let mut order = Vec::with_capacity(nodes.len());
    let mut stack = vec![0];
    while let Some(id) = stack.pop() {
        order.push(id);
        stack.extend(nodes[id].edges().iter().rev().map(|e| e.child));
    }
    order
}

/// Per-node solution of the backward recursion.
#[derive(Debug, Clone, PartialEq)]
pub struct SolvedTree {
    /// `P(x_t|x_<t)` over the node's edges; `None` for leaves.
    pub policies: Vec<Option<ProbabilityVector>>,
    pub log_z: Vec<f64>,
    pub values: Vec<f64>,
}

impl SolvedTree {
    pub fn root_value(&self) -> f64 {
        self.values[0]
    }

    /// Probability of each leaf under the solved policies, in [`DecisionTree::leaves`] order.
    pub fn path_distribution(&self, tree: &DecisionTree) -> Vec<f64> {
        tree.leaves()
            .iter()
            .map(|&l| {
                tree.path_to(l)
                    .steps
                    .iter()
                    .map(|&(n, k)| self.policies[n].as_ref().expect("internal")[k])
                    .product()
            })
            .collect()
    }
}

/// Backward induction over the tree (strict post-order).
pub fn solve_tree(tree: &DecisionTree) -> SolvedTree {
    let n = tree.len();
    let mut policies = vec![None; n];
    let mut log_z = vec![0.0; n];
    let mut values = vec![0.0; n];
    for id in (0..n).rev() {
        let Node::Choice { beta, edges, .. } = &tree.nodes[id] else {
            continue;
        };
        let beta = *beta;
        let q: Vec<f64> = edges.iter().map(|e| e.prior).collect();
        let cont: Vec<f64> = edges.iter().map(|e| e.reward + values[e.child]).collect();
        let lw: Vec<f64> = q
            .iter()
            .zip(&cont)
            .map(|(q, c)| q.ln() + beta * c)
            .collect();
        let (policy, lz) =
            ProbabilityVector::from_log_weights(&lw).expect("validated tree has finite weights");
        values[id] = certainty_equivalent(&q, &cont, beta);
        log_z[id] = lz;
        policies[id] = Some(policy);
    }
    SolvedTree {
        policies,
        log_z,
        values,
    }
}

/// Utility under temperature `β` that reproduces the equilibrium reached
/// under temperature `α`: `V(x) = U(x) - (1/α - 1/β) log(P(x)/Q(x))`.
pub fn reparameterize_utility(
    utility: &[f64],
    p: &ProbabilityVector,
    q: &ProbabilityVector,
    alpha: f64,
    beta: f64,
) -> Result<Vec<f64>> {
    for (name, t) in [("alpha", alpha), ("beta", beta)] {
        if t == 0.0 || !t.is_finite() {
            return Err(Error::parameter(format!(
                "{name} must be finite and nonzero, got {t}"
            )));
        }
    }
    if !p.is_strictly_positive() || !q.is_strictly_positive() {
        return Err(Error::parameter("P and Q must be strictly positive"));
    }
    if utility.len() != p.len() || p.len() != q.len() {
        return Err(Error::domain("utility, P and Q must have equal length"));
    }
    let coeff = 1.0 / alpha - 1.0 / beta;
    Ok(utility
        .iter()
        .zip(p.as_slice().iter().zip(q.as_slice()))
        .map(|(u, (pi, qi))| u - coeff * (pi / qi).ln())
        .collect())
}

/// Flat Gibbs distribution over whole trajectories,
/// `Q(x_≤T) exp(α U(x_≤T)) / Z`, in leaf order.
pub fn trajectory_equilibrium(
    tree: &DecisionTree,
    utilities: &[f64],
    alpha: f64,
) -> Result<Vec<f64>> {
    tree.check_utilities(utilities)?;
    if alpha == 0.0 || !alpha.is_finite() {
        return Err(Error::parameter("alpha must be finite and nonzero"));
    }
    let lw: Vec<f64> = tree
        .path_priors()
        .iter()
        .zip(tree.leaves())
        .map(|(q, &l)| q.ln() + alpha * utilities[l])
        .collect();
    Ok(ProbabilityVector::from_log_weights(&lw)?.0.into_vec())
}

/// Edge rewards `R(x_t|x_<t) = [U(x_≤t) - U(x_<t)] - (1/α - 1/β(x_<t)) log(P(x_t|x_<t)/Q(x_t|x_<t))`.
///
/// `utilities[node]` is the utility of the prefix ending at `node` (the root
/// entry is `U(ε)`); `path_probs` is the distribution `P` over leaves whose
/// conditionals enter the correction term. Returns `rewards[node][edge]`.
pub fn rewards_from_utilities(
    tree: &DecisionTree,
    utilities: &[f64],
    path_probs: &[f64],
    alpha: f64,
) -> Result<Vec<Vec<f64>>> {
    tree.check_utilities(utilities)?;
    if alpha == 0.0 || !alpha.is_finite() {
        return Err(Error::parameter("alpha must be finite and nonzero"));
    }
    let cond = tree.conditionals(path_probs)?;
    Ok(tree
        .nodes
        .iter()
        .enumerate()
        .map(|(id, node)| match node {
            Node::Leaf => Vec::new(),
            Node::Choice { beta, edges, .. } => {
                let coeff = 1.0 / alpha - 1.0 / beta;
                edges
                    .iter()
                    .zip(&cond[id])
                    .map(|(e, &p)| utilities[e.child] - utilities[id] - coeff * (p / e.prior).ln())
                    .collect()
            }
        })
        .collect())
}

/// Flat free energy `Σ P(x_≤T) {U(x_≤T) - (1/α) log(P(x_≤T)/Q(x_≤T))}` over
/// leaves; `leaf_utilities` follows [`DecisionTree::leaves`] order.
pub fn flat_free_energy(
    tree: &DecisionTree,
    path_probs: &[f64],
    alpha: f64,
    leaf_utilities: &[f64],
) -> Result<f64> {
    tree.check_path_distribution(path_probs)?;
    if leaf_utilities.len() != tree.leaves.len() {
        return Err(Error::domain("one utility per leaf required"));
    }
    if alpha == 0.0 || !alpha.is_finite() {
        return Err(Error::parameter("alpha must be finite and nonzero"));
    }
    Ok(path_probs
        .iter()
        .zip(tree.path_priors())
        .zip(leaf_utilities)
        .map(|((&p, q), &u)| p * (u - (p / q).ln() / alpha))
        .sum())
}

/// Nested free energy
/// `U(ε) + Σ P(x_≤T) Σ_t {R(x_t|x_<t) - (1/β(x_<t)) log(P(x_t|x_<t)/Q(x_t|x_<t))}`
/// using the tree's own rewards and temperatures.
pub fn nested_free_energy(tree: &DecisionTree, path_probs: &[f64]) -> Result<f64> {
    let cond = tree.conditionals(path_probs)?;
    let paths = tree.paths();
    Ok(tree.root_utility
        + paths
            .iter()
            .zip(path_probs)
            .map(|(path, &p)| {
                p * path
                    .steps
                    .iter()
                    .map(|&(n, k)| {
                        let e = tree.edge(n, k);
                        e.reward - (cond[n][k] / e.prior).ln() / tree.beta_at(n)
                    })
                    .sum::<f64>()
            })
            .sum::<f64>())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FreeEnergyPair {
    pub flat: f64,
    pub nested: f64,
}

/// Evaluates the trajectory free energy both as a flat functional of whole
/// paths and in the nested reward form.
///
/// The tree's rewards must be those produced by [`rewards_from_utilities`]
/// for the same utilities, `P` and `α`, and its root utility must be `U(ε)`;
/// otherwise a diagnostic error is returned.
pub fn trajectory_free_energy(
    tree: &DecisionTree,
    path_probs: &[f64],
    alpha: f64,
    utilities: &[f64],
) -> Result<FreeEnergyPair> {
    let expected = rewards_from_utilities(tree, utilities, path_probs, alpha)?;
    if (tree.root_utility - utilities[tree.root()]).abs() > 1e-9 * (1.0 + tree.root_utility.abs()) {
        return Err(Error::diagnostic(
            "tree root utility differs from the prefix utility of the root",
        ));
    }
    for (id, node) in tree.nodes.iter().enumerate() {
        for (e, &r) in node.edges().iter().zip(&expected[id]) {
            if (e.reward - r).abs() > 1e-9 * (1.0 + r.abs()) {
                return Err(Error::diagnostic(format!(
                    "reward on edge `{}` of node {id} is {} but the utilities imply {r}",
                    e.label, e.reward
                )));
            }
        }
    }
    let leaf_u: Vec<f64> = tree.leaves.iter().map(|&l| utilities[l]).collect();
    Ok(FreeEnergyPair {
        flat: flat_free_energy(tree, path_probs, alpha, &leaf_u)?,
        nested: nested_free_energy(tree, path_probs)?,
    })
}

/// Nested, serializable form of a decision tree used by scenario files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSpec {
    pub kind: NodeKind,
    pub beta: f64,
    pub children: Vec<EdgeSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeSpec {
    pub label: String,
    pub prior: f64,
    pub reward: f64,
    /// Absent for edges that end in a leaf.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node: Option<NodeSpec>,
}

impl DecisionTree {
    pub fn from_spec(root: &NodeSpec, root_utility: f64) -> Result<Self> {
        let mut b = TreeBuilder::new(root.kind, root.beta);
        fn walk(b: &mut TreeBuilder, at: NodeId, spec: &NodeSpec) -> Result<()> {
            for e in &spec.children {
                match &e.node {
                    None => {
                        b.leaf(at, e.label.clone(), e.prior, e.reward)?;
                    }
                    Some(child) => {
                        let id = b.branch(
                            at,
                            e.label.clone(),
                            e.prior,
                            e.reward,
                            child.kind,
                            child.beta,
                        )?;
                        walk(b, id, child)?;
                    }
                }
            }
            Ok(())
        }
        walk(&mut b, 0, root)?;
        b.build(root_utility)
    }

    pub fn to_spec(&self) -> NodeSpec {
        fn walk(t: &DecisionTree, id: NodeId) -> NodeSpec {
            let Node::Choice { kind, beta, edges } = &t.nodes[id] else {
                unreachable!("to_spec only visits internal nodes")
            };
            NodeSpec {
                kind: *kind,
                beta: *beta,
                children: edges
                    .iter()
                    .map(|e| EdgeSpec {
                        label: e.label.clone(),
                        prior: e.prior,
                        reward: e.reward,
                        node: (!t.nodes[e.child].is_leaf()).then(|| walk(t, e.child)),
                    })
                    .collect(),
            }
        }
        walk(self, 0)
    }
}
