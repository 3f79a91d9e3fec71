use super::TriangleMesh;
use crate::error::Result;

/// A mesh split into edge-connected pieces.
#[derive(Debug, Clone)]
pub struct ComponentSplit {
    pub component_meshes: Vec<TriangleMesh>,
    /// For each component, the original vertex index of each component vertex.
    pub vertex_maps: Vec<Vec<usize>>,
}

/// Splits a mesh into edge-connected components, ordered by their lowest original vertex.
pub fn connected_components(mesh: &TriangleMesh) -> Result<ComponentSplit> {
    let n = mesh.num_vertices();
    let mut label = vec![usize::MAX; n];
    let mut count = 0;
    let mut stack = Vec::new();
    for start in 0..n {
        if label[start] != usize::MAX {
            continue;
        }
        label[start] = count;
        stack.push(start);
        while let Some(u) = stack.pop() {
            for &v in mesh.neighbors(u) {
                if label[v] == usize::MAX {
                    label[v] = count;
                    stack.push(v);
                }
            }
        }
        count += 1;
    }

    let mut vertex_maps = vec![Vec::new(); count];
    let mut local = vec![0usize; n];
    for v in 0..n {
        local[v] = vertex_maps[label[v]].len();
        vertex_maps[label[v]].push(v);
    }
    let mut faces = vec![Vec::new(); count];
    for f in mesh.faces() {
        let c = label[f[0]];
        faces[c].push([local[f[0]], local[f[1]], local[f[2]]]);
    }
    let component_meshes = vertex_maps
        .iter()
        .zip(faces)
        .map(|(map, f)| {
            let p = map.iter().map(|&v| mesh.positions()[v]).collect();
            TriangleMesh::new(p, f)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ComponentSplit {
        component_meshes,
        vertex_maps,
    })
}
