"""Round-trip the two binary formats: GDE1 embeddings, GDM1 matrices."""

import tempfile
from pathlib import Path

import numpy as np

from gddsg import read_embedding_arrays, read_matrix, write_embedding_arrays, write_matrix


def main():
    rng = np.random.default_rng(0)
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)

        # GDE1: u32 class ids + f32 vectors, little-endian
        labels = np.array([3, 3, 7, 12], dtype=np.int64)
        vectors = rng.standard_normal((4, 5)).astype(np.float32).astype(np.float64)
        emb = tmp / "toy.gde1"
        write_embedding_arrays(emb, 5, labels, vectors)
        dim, labels2, vectors2 = read_embedding_arrays(emb)
        print(f"GDE1: dim={dim} count={len(labels2)} bytes={emb.stat().st_size}")
        print(f"  labels roundtrip exact: {np.array_equal(labels, labels2)}")
        print(f"  vectors roundtrip exact: {np.array_equal(vectors, vectors2)}")

        # GDM1: f64 matrices, bit-exact storage for model state
        m = rng.standard_normal((3, 4))
        mat = tmp / "toy.gdm1"
        write_matrix(mat, m)
        m2 = read_matrix(mat)
        print(f"GDM1: shape={m2.shape} bytes={mat.stat().st_size}")
        print(f"  matrix roundtrip bit-exact: {np.array_equal(m, m2)}")

        # same content written twice gives identical bytes
        mat2 = tmp / "again.gdm1"
        write_matrix(mat2, m)
        print(f"  deterministic bytes: {mat.read_bytes() == mat2.read_bytes()}")


if __name__ == "__main__":
    main()
