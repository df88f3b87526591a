"""
ランダム埋め込みモジュール

スケッチに使う 8 種類のランダム埋め込み Ω (n×ℓ) と、解析に現れる Wishart 行列・
Beta 行列のサンプラーを提供します。サンプリングはすべてシード決定的です。
"""

import enum
import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import scipy.fft

from .dense_core import FieldTag, adjoint, psd_inv_sqrt, thin_qr
from .exceptions import InvalidSpec

logger = logging.getLogger("embeddings")


class EmbeddingKind(enum.Enum):
    """
    埋め込みの種類
    """

    GAUSSIAN = "gaussian"
    HAAR = "haar"
    SIGN = "sign"
    UNIFORM = "uniform"
    SPARSE_IID = "sparse-iid"
    SPARSE_STACK = "sparse-stack"
    SRTT = "srtt"
    GIVENS = "givens"

    @classmethod
    def from_name(cls, name: str) -> "EmbeddingKind":
        key = name.strip().lower().replace("_", "-")
        aliases = {"orthonormal": "haar", "haar-orthonormal": "haar", "sparseiid": "sparse-iid", "sparsestack": "sparse-stack"}
        try:
            return cls(aliases.get(key, key))
        except ValueError:
            raise InvalidSpec(f"不明な埋め込みの種類です: {name}") from None

    @property
    def universality_class(self) -> "EmbeddingKind":
        """
        この埋め込みが属する普遍性クラスの代表（GAUSSIAN または HAAR）
        """
        return EmbeddingKind.HAAR if self in ORTHONORMAL_KINDS else EmbeddingKind.GAUSSIAN


ORTHONORMAL_KINDS = frozenset({EmbeddingKind.HAAR, EmbeddingKind.SRTT, EmbeddingKind.GIVENS})
REAL_ONLY_KINDS = frozenset(
    {
        EmbeddingKind.SIGN,
        EmbeddingKind.UNIFORM,
        EmbeddingKind.SPARSE_IID,
        EmbeddingKind.SPARSE_STACK,
        EmbeddingKind.SRTT,
        EmbeddingKind.GIVENS,
    }
)
SPARSE_KINDS = frozenset({EmbeddingKind.SPARSE_IID, EmbeddingKind.SPARSE_STACK})

# 普遍性実験での既定のスパース度
DEFAULT_ZETA = {EmbeddingKind.SPARSE_IID: 16, EmbeddingKind.SPARSE_STACK: 8}


def default_rotations(n: int) -> int:
    """
    Givens 埋め込みの既定の回転数 ⌈4·n·ln n⌉（自然対数）
    """
    if n <= 1:
        return 0
    return math.ceil(4 * n * math.log(n))


@dataclass(frozen=True)
class RngStream:
    """
    シード付き乱数ストリーム

    (master_seed, stream_index, path) が同じなら同じ乱数列をビット単位で再現し、
    異なる stream_index / path は統計的に独立なストリームになります。

    Attributes:
        master_seed: 64ビットのマスターシード
        stream_index: ストリーム番号（試行番号）
        path: サブストリームの経路（spawn で伸びる）
    """

    master_seed: int
    stream_index: int = 0
    path: Tuple[int, ...] = ()

    def spawn(self, key: int) -> "RngStream":
        """
        独立なサブストリームを返す
        """
        return RngStream(self.master_seed, self.stream_index, self.path + (int(key),))

    def generator(self) -> np.random.Generator:
        """
        このストリームに対応する numpy の Generator を生成する
        """
        seed_seq = np.random.SeedSequence(self.master_seed & 0xFFFFFFFFFFFFFFFF, spawn_key=(self.stream_index,) + self.path)
        return np.random.Generator(np.random.Philox(seed_seq))


@dataclass(frozen=True)
class EmbeddingSpec:
    """
    埋め込みの指定

    Attributes:
        kind: 埋め込みの種類
        n: 周囲空間の次元（行数）
        ell: 埋め込み次元 ℓ（列数）
        field: スカラー体
        zeta: Ω の 1 行（Ω* の 1 列）あたりの非ゼロ数 ζ（スパース埋め込みのみ）
        rotations: Givens 回転の数（Givens のみ、既定は ⌈4·n·ln n⌉）
    """

    kind: EmbeddingKind
    n: int
    ell: int
    field: FieldTag = FieldTag.REAL
    zeta: Optional[int] = None
    rotations: Optional[int] = None

    def __post_init__(self):
        if self.n < 1 or self.ell < 1:
            raise InvalidSpec(f"次元は 1 以上である必要があります: n={self.n}, ℓ={self.ell}")
        if self.ell > self.n:
            raise InvalidSpec(f"ℓ={self.ell} は n={self.n} 以下である必要があります")
        if self.kind in REAL_ONLY_KINDS and self.field is not FieldTag.REAL:
            raise InvalidSpec(f"埋め込み '{self.kind.value}' は実数体のみ対応しています")
        if self.kind in SPARSE_KINDS:
            zeta = self.effective_zeta
            if zeta < 1:
                raise InvalidSpec(f"ζ={zeta} は 1 以上である必要があります")
            if self.kind is EmbeddingKind.SPARSE_STACK and zeta > self.n:
                raise InvalidSpec(f"SparseStack の ζ={zeta} は n={self.n} 以下である必要があります")
        if self.rotations is not None and self.rotations < 0:
            raise InvalidSpec(f"回転数 {self.rotations} は 0 以上である必要があります")

    @property
    def effective_zeta(self) -> int:
        if self.zeta is not None:
            return self.zeta
        return DEFAULT_ZETA.get(self.kind, 1)

    @property
    def effective_rotations(self) -> int:
        if self.rotations is not None:
            return self.rotations
        return default_rotations(self.n)


def _gaussian(gen: np.random.Generator, shape: Tuple[int, int], field: FieldTag) -> np.ndarray:
    """
    N_K(0,1) の iid 行列。複素数は (g₁ + i g₂)/√2
    """
    if field is FieldTag.REAL:
        return gen.standard_normal(shape)
    return (gen.standard_normal(shape) + 1j * gen.standard_normal(shape)) / np.sqrt(2.0)


def _random_signs(gen: np.random.Generator, shape) -> np.ndarray:
    return gen.integers(0, 2, size=shape).astype(np.float64) * 2.0 - 1.0


def _sparse_iid(gen: np.random.Generator, n: int, ell: int, zeta: int) -> np.ndarray:
    # Ω* (ℓ×n) の各列、つまり Ω の各行に平均 ζ 個。各成分が確率 min(ζ/ℓ, 1) で ±1/√ζ
    mask = gen.random((n, ell)) < min(zeta / ell, 1.0)
    return mask * _random_signs(gen, (n, ell)) / np.sqrt(zeta)


def _sparse_stack(gen: np.random.Generator, n: int, ell: int, zeta: int) -> np.ndarray:
    # Ω の各行の ℓ 列を min(ζ, ℓ) 個の連続ブロックに分け、ブロックごとに 1 つだけ ±1/√ζ を置く
    blocks = min(zeta, ell)
    sizes = np.full(blocks, ell // blocks)
    sizes[: ell % blocks] += 1
    starts = np.concatenate(([0], np.cumsum(sizes)[:-1]))
    offsets = np.floor(gen.random((n, blocks)) * sizes[np.newaxis, :]).astype(np.int64)
    cols = starts[np.newaxis, :] + offsets
    rows = np.broadcast_to(np.arange(n)[:, np.newaxis], (n, blocks))
    Omega = np.zeros((n, ell))
    Omega[rows, cols] = _random_signs(gen, (n, blocks)) / np.sqrt(zeta)
    return Omega


def _srtt(gen: np.random.Generator, n: int, ell: int) -> np.ndarray:
    # Ω* = S·C·D₂·C·D₁ （C は正規直交 DCT-II、S は非復元抽出の行選択）
    # Ω = D₁·C*·D₂·C*·S* を S* から順に作る
    d1 = _random_signs(gen, n)
    d2 = _random_signs(gen, n)
    rows = gen.choice(n, size=ell, replace=False)
    Omega = np.zeros((n, ell))
    Omega[rows, np.arange(ell)] = 1.0
    Omega = scipy.fft.idct(Omega, type=2, norm="ortho", axis=0)
    Omega *= d2[:, np.newaxis]
    Omega = scipy.fft.idct(Omega, type=2, norm="ortho", axis=0)
    Omega *= d1[:, np.newaxis]
    return Omega


def _givens(gen: np.random.Generator, n: int, ell: int, rotations: int) -> np.ndarray:
    # 一様ランダムな Givens 回転の積 G = R_T ⋯ R_1 の一様に選んだ ℓ 列
    cols = gen.choice(n, size=ell, replace=False)
    Omega = np.zeros((n, ell))
    Omega[cols, np.arange(ell)] = 1.0
    if n < 2 or rotations == 0:
        return Omega

    first = gen.integers(0, n, size=rotations)
    second = (first + gen.integers(1, n, size=rotations)) % n
    angles = gen.uniform(0.0, 2.0 * np.pi, size=rotations)
    cos, sin = np.cos(angles), np.sin(angles)

    # 連続する回転のうち座標が重ならないものはまとめて適用しても積は変わらない
    start = 0
    touched = set()
    for t in range(rotations + 1):
        if t < rotations and first[t] not in touched and second[t] not in touched:
            touched.update((first[t], second[t]))
            continue
        i, j = first[start:t], second[start:t]
        c, s = cos[start:t, np.newaxis], sin[start:t, np.newaxis]
        xi, xj = Omega[i], Omega[j]
        Omega[i] = c * xi - s * xj
        Omega[j] = s * xi + c * xj
        start = t
        touched = {first[t], second[t]} if t < rotations else set()
    return Omega


def sample_embedding(spec: EmbeddingSpec, rng: RngStream) -> np.ndarray:
    """
    指定された分布から n×ℓ の埋め込み Ω を 1 つサンプリングする

    Args:
        spec: 埋め込みの指定
        rng: 乱数ストリーム

    Returns:
        n×ℓ 行列（HAAR / SRTT / GIVENS は正規直交列）
    """
    gen = rng.generator()
    n, ell, kind = spec.n, spec.ell, spec.kind

    if kind is EmbeddingKind.GAUSSIAN:
        return _gaussian(gen, (n, ell), spec.field)
    if kind is EmbeddingKind.HAAR:
        Q, _ = thin_qr(_gaussian(gen, (n, ell), spec.field))
        return Q
    if kind is EmbeddingKind.SIGN:
        return _random_signs(gen, (n, ell))
    if kind is EmbeddingKind.UNIFORM:
        return gen.uniform(-1.0, 1.0, size=(n, ell))
    if kind is EmbeddingKind.SPARSE_IID:
        return _sparse_iid(gen, n, ell, spec.effective_zeta)
    if kind is EmbeddingKind.SPARSE_STACK:
        return _sparse_stack(gen, n, ell, spec.effective_zeta)
    if kind is EmbeddingKind.SRTT:
        return _srtt(gen, n, ell)
    if kind is EmbeddingKind.GIVENS:
        return _givens(gen, n, ell, spec.effective_rotations)
    raise InvalidSpec(f"未対応の埋め込みです: {kind}")


def sample_haar_unitary(n: int, field: FieldTag, rng: RngStream) -> np.ndarray:
    """
    n×n の Haar 分布ユニタリ（実数体なら直交）行列
    """
    return sample_embedding(EmbeddingSpec(EmbeddingKind.HAAR, n, n, field), rng)


def sample_wishart(r: int, ell: int, field: FieldTag, rng: RngStream) -> np.ndarray:
    """
    W = G G*（G は r×ℓ の iid N_K(0,1)）を返す
    """
    if r < 1 or ell < 1:
        raise ValueError(f"r={r}, ℓ={ell} は 1 以上である必要があります")
    G = _gaussian(rng.generator(), (r, ell), field)
    W = G @ adjoint(G)
    return 0.5 * (W + adjoint(W))


def sample_beta(r: int, ell: int, n: int, field: FieldTag, rng: RngStream) -> np.ndarray:
    """
    X = (W₁+W₂)^{-1/2} W₁ (W₁+W₂)^{-1/2} を返す

    W₁ ~ Wishart(r, ℓ) と W₂ ~ Wishart(r, n−ℓ) は独立です。ℓ = n のとき W₂ = 0 で X = I。
    """
    if not (1 <= r <= n and 1 <= ell <= n):
        raise ValueError(f"r={r}, ℓ={ell} は 1 以上 n={n} 以下である必要があります")
    W1 = sample_wishart(r, ell, field, rng.spawn(1))
    if ell == n:
        W2 = np.zeros_like(W1)
    else:
        W2 = sample_wishart(r, n - ell, field, rng.spawn(2))
    S = psd_inv_sqrt(W1 + W2)
    X = S @ W1 @ S
    return 0.5 * (X + adjoint(X))


def haar_block_check(spec: EmbeddingSpec, rng: RngStream, r: int) -> np.ndarray:
    """
    Haar 埋め込みの先頭 r 行 Ω₁ (r×ℓ) を返す

    Ω₁Ω₁* は Beta_K(r, ℓ, n) に従うので、sample_beta との分布比較に使います。
    """
    if spec.kind is not EmbeddingKind.HAAR:
        raise InvalidSpec(f"haar_block_check は HAAR 埋め込み専用です: {spec.kind.value}")
    if not 1 <= r <= spec.n:
        raise InvalidSpec(f"r={r} は 1 以上 n={spec.n} 以下である必要があります")
    return sample_embedding(spec, rng)[:r, :]
