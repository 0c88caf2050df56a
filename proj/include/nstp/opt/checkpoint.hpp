#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

namespace nstp {

/// Reverse access to the states x_0..x_N of a recursion x_{k+1} = step(k, x_k).
///
/// With a stride c > 1 only x_0, x_c, x_2c, ... are kept; reading a state
/// outside the cached window recomputes that window from its checkpoint.
/// Reading in decreasing k order costs one extra forward sweep and holds
/// O(N / c + c) states. Stride 1 stores everything.
template <typename State>
class ReverseTape {
public:
    using Step = std::function<State(int, const State&)>;

    ReverseTape(State x0, int steps, int stride, Step step)
        : steps_(steps), stride_(std::max(1, stride)), step_(std::move(step)) {
        if (steps < 0) throw std::invalid_argument("ReverseTape: negative step count");
        State x = std::move(x0);
        checkpoints_.push_back(x);
        for (int k = 0; k < steps_; ++k) {
            x = step_(k, x);
            if ((k + 1) % stride_ == 0) checkpoints_.push_back(x);
            if (k + 1 == steps_) last_ = x;
        }
        if (steps_ == 0) last_ = checkpoints_.front();
    }

    /// Square-root stride for N steps.
    static int sqrt_stride(int steps) {
        return std::max(1, static_cast<int>(std::ceil(std::sqrt(static_cast<double>(steps)))));
    }

    int steps() const noexcept { return steps_; }
    int stride() const noexcept { return stride_; }
    const State& final_state() const { return *last_; }
    int recomputed_steps() const noexcept { return recomputed_; }
    /// States held right now (checkpoints plus the cached window).
    std::size_t stored_states() const { return checkpoints_.size() + window_.size(); }

    const State& at(int k) {
        if (k < 0 || k > steps_) throw std::out_of_range("ReverseTape: index out of range");
        if (k == steps_) return *last_;
        if (k % stride_ == 0) return checkpoints_[k / stride_];
        const int base = (k / stride_) * stride_;
        if (base != window_base_) fill_window(base);
        return window_[k - base];
    }

private:
    void fill_window(int base) {
        window_.clear();
        window_.push_back(checkpoints_[base / stride_]);
        const int end = std::min(base + stride_, steps_);
        for (int k = base; k + 1 < end; ++k) {
            window_.push_back(step_(k, window_.back()));
            ++recomputed_;
        }
        window_base_ = base;
    }

    int steps_;
    int stride_;
    Step step_;
    std::vector<State> checkpoints_;
    std::optional<State> last_;
    std::vector<State> window_;
    int window_base_ = -1;
    int recomputed_ = 0;
};

}  // namespace nstp
