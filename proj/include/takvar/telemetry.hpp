#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <string>

namespace takvar {

/// The computation phases of the three variance routes, matching the
/// benchmark legend: Cholesky (ordering + symbolic + numeric factorization),
/// Solve (forward substitution of the direct route), Hadamard (row sums of
/// the elementwise products), PartInv (Takahashi recursions), Sim (noise
/// generation + backward substitution), Interp (prediction-ensemble product
/// and empirical variances).
enum class Phase : int { cholesky = 0, solve, hadamard, partinv, sim, interp };

inline constexpr int kPhaseCount = 6;

inline const char* phase_name(Phase p) {
    constexpr const char* names[kPhaseCount] = {"Cholesky", "Solve",   "Hadamard",
                                                "PartInv",  "Sim",     "Interp"};
    return names[static_cast<int>(p)];
}

/// Wall-clock seconds and multiplicative-operation tallies per phase.
struct PhaseStats {
    std::array<double, kPhaseCount> seconds{};
    std::array<std::uint64_t, kPhaseCount> ops{};

    double& time(Phase p) { return seconds[static_cast<int>(p)]; }
    double time(Phase p) const { return seconds[static_cast<int>(p)]; }
    std::uint64_t& op_count(Phase p) { return ops[static_cast<int>(p)]; }
    std::uint64_t op_count(Phase p) const { return ops[static_cast<int>(p)]; }

    double total_seconds() const {
        double t = 0.0;
        for (double s : seconds) t += s;
        return t;
    }

    Phase dominant_phase() const {
        int best = 0;
        for (int i = 1; i < kPhaseCount; ++i)
            if (seconds[static_cast<std::size_t>(i)] > seconds[static_cast<std::size_t>(best)])
                best = i;
        return static_cast<Phase>(best);
    }

    void merge(const PhaseStats& other) {
        for (int i = 0; i < kPhaseCount; ++i) {
            seconds[static_cast<std::size_t>(i)] += other.seconds[static_cast<std::size_t>(i)];
            ops[static_cast<std::size_t>(i)] += other.ops[static_cast<std::size_t>(i)];
        }
    }
};

/// Accumulates wall time into one PhaseStats slot (monotonic clock).
class PhaseTimer {
public:
    PhaseTimer(PhaseStats& stats, Phase phase)
        : stats_(stats), phase_(phase), start_(std::chrono::steady_clock::now()) {}

    ~PhaseTimer() { stop(); }

    void stop() {
        if (stopped_) return;
        stopped_ = true;
        const auto end = std::chrono::steady_clock::now();
        stats_.time(phase_) += std::chrono::duration<double>(end - start_).count();
    }

    PhaseTimer(const PhaseTimer&) = delete;
    PhaseTimer& operator=(const PhaseTimer&) = delete;

private:
    PhaseStats& stats_;
    Phase phase_;
    std::chrono::steady_clock::time_point start_;
    bool stopped_ = false;
};

}  // namespace takvar
