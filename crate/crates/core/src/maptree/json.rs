use serde_json::{json, Value};

use super::MapTree;

impl MapTree {
    /// JSON description of every node. `map_files` names the dense map file of each
    /// surviving leaf, as `(node id, relative path)`.
    pub fn to_json(&self, map_files: &[(usize, String)]) -> Value {
        let nodes: Vec<Value> = self
            .nodes
            .iter()
            .map(|n| {
                let mut v = json!({
                    "id": n.id,
                    "parent_id": n.parent,
                    "children": n.children,
                    "rows": n.fmap.rows(),
                    "cols": n.fmap.cols(),
                    "status": n.status.as_str(),
                    "terminal": n.terminal,
                    "energy_ortho": n.energies.0,
                    "energy_lapcomm": n.energies.1,
                    "parent_deviation": n.parent_deviation,
                    "fmap": n.fmap.to_json(),
                });
                if let Some((_, path)) = map_files.iter().find(|(id, _)| *id == n.id) {
                    v["map_file"] = json!(path);
                }
                v
            })
            .collect();
        let c = &self.config;
        json!({
            "shape_ids": [self.shape_ids.0, self.shape_ids.1],
            "config": {
                "epsilon_group": c.epsilon_group,
                "epsilon_ortho": c.epsilon_ortho,
                "epsilon_lapcomm": c.epsilon_lapcomm,
                "kappa": c.kappa,
                "max_group_size": c.max_group_size,
                "dedup_agreement": c.dedup_agreement,
                "refine_budget": c.refine_budget,
                "sample_count": c.sample_count,
                "k_final": c.k_final,
                "max_leaves": c.max_leaves,
            },
            "leaf_cap_hit": self.leaf_cap_hit,
            "warnings": self.warnings,
            "surviving_leaves": self.surviving_leaves(),
            "nodes": nodes,
        })
    }
}
