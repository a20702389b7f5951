#pragma once

#include <algorithm>
#include <cstddef>

// Dense matmul kernels used by the autodiff affine op. Hand-rolled on purpose:
// each output element is accumulated in a fixed order that does not depend on
// how the batch is tiled or which columns are present, so training runs and
// grid evaluations are bitwise reproducible (same-seed checkpoints identical,
// slab partition of a grid irrelevant). A threaded BLAS cannot promise that.

namespace salforge::ad::detail {

// out[M,N] += A[M,K] * B[K,N], all row-major.
template <typename S>
void addmm_nn(S* out, const S* A, const S* B, int M, int K, int N) {
    constexpr int NB = 256;
    for (int n0 = 0; n0 < N; n0 += NB) {
        const int nb = std::min(NB, N - n0);
        for (int m = 0; m < M; ++m) {
            S* o = out + static_cast<std::size_t>(m) * N + n0;
            const S* arow = A + static_cast<std::size_t>(m) * K;
            for (int k = 0; k < K; ++k) {
                const S a = arow[k];
                const S* b = B + static_cast<std::size_t>(k) * N + n0;
                for (int n = 0; n < nb; ++n) o[n] += a * b[n];
            }
        }
    }
}

// out[M,N] += A^T * B where A is [K,M]: out[m,n] += sum_k A[k,m] * B[k,n].
template <typename S>
void addmm_tn(S* out, const S* A, const S* B, int K, int M, int N) {
    constexpr int NB = 256;
    for (int n0 = 0; n0 < N; n0 += NB) {
        const int nb = std::min(NB, N - n0);
        for (int m = 0; m < M; ++m) {
            S* o = out + static_cast<std::size_t>(m) * N + n0;
            for (int k = 0; k < K; ++k) {
                const S a = A[static_cast<std::size_t>(k) * M + m];
                const S* b = B + static_cast<std::size_t>(k) * N + n0;
                for (int n = 0; n < nb; ++n) o[n] += a * b[n];
            }
        }
    }
}

// out[M,K] += A[M,N] * B[K,N]^T: out[m,k] += sum_n A[m,n] * B[k,n].
// Reduction over the batch axis; 16 independent accumulators per output give
// the vectorizer room while keeping the combine order fixed in source.
template <typename S>
void addmm_nt(S* out, const S* A, const S* B, int M, int N, int K) {
    constexpr int W = 16;
    constexpr int KT = 4;
    for (int m = 0; m < M; ++m) {
        const S* arow = A + static_cast<std::size_t>(m) * N;
        for (int k0 = 0; k0 < K; k0 += KT) {
            const int kt = std::min(KT, K - k0);
            for (int kk = 0; kk < kt; ++kk) {
                const int k = k0 + kk;
                const S* brow = B + static_cast<std::size_t>(k) * N;
                S acc[W] = {};
                int n = 0;
                for (; n + W <= N; n += W)
                    for (int j = 0; j < W; ++j) acc[j] += arow[n + j] * brow[n + j];
                for (; n < N; ++n) acc[n % W] += arow[n] * brow[n];
                S s0 = acc[0] + acc[1], s1 = acc[2] + acc[3];
                S s2 = acc[4] + acc[5], s3 = acc[6] + acc[7];
                S s4 = acc[8] + acc[9], s5 = acc[10] + acc[11];
                S s6 = acc[12] + acc[13], s7 = acc[14] + acc[15];
                out[static_cast<std::size_t>(m) * K + k] +=
                    ((s0 + s1) + (s2 + s3)) + ((s4 + s5) + (s6 + s7));
            }
        }
    }
}

// out[M] += sum of each row of A[M,N]; same accumulator scheme as addmm_nt.
template <typename S>
void add_row_sums(S* out, const S* A, int M, int N) {
    constexpr int W = 16;
    for (int m = 0; m < M; ++m) {
        const S* arow = A + static_cast<std::size_t>(m) * N;
        S acc[W] = {};
        int n = 0;
        for (; n + W <= N; n += W)
            for (int j = 0; j < W; ++j) acc[j] += arow[n + j];
        for (; n < N; ++n) acc[n % W] += arow[n];
        S s0 = acc[0] + acc[1], s1 = acc[2] + acc[3];
        S s2 = acc[4] + acc[5], s3 = acc[6] + acc[7];
        S s4 = acc[8] + acc[9], s5 = acc[10] + acc[11];
        S s6 = acc[12] + acc[13], s7 = acc[14] + acc[15];
        out[m] += ((s0 + s1) + (s2 + s3)) + ((s4 + s5) + (s6 + s7));
    }
}

}  // namespace salforge::ad::detail
