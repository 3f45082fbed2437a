#include "okwugbe/training.hpp"

#include <cmath>
#include <numbers>

namespace okwugbe::train {

double lr_at(Schedule schedule, std::size_t step, std::size_t total_steps, double max_lr) {
  if (total_steps == 0 || step >= total_steps) {
    throw std::invalid_argument("lr_at: step " + std::to_string(step) +
                                " out of range [0, " + std::to_string(total_steps) + ")");
  }
  if (schedule == Schedule::kConstant) return max_lr;

  const double start_lr = max_lr / 25.0;
  const double final_lr = max_lr / 1e4;
  const std::size_t warm = static_cast<std::size_t>(0.3 * static_cast<double>(total_steps));
  if (warm == 0 || step <= warm) {
    if (warm == 0) return max_lr;
    return start_lr + (max_lr - start_lr) * static_cast<double>(step) / static_cast<double>(warm);
  }
  if (total_steps - 1 == warm) return max_lr;
  const double t =
      static_cast<double>(step - warm) / static_cast<double>(total_steps - 1 - warm);
  return final_lr + (max_lr - final_lr) * 0.5 * (1.0 + std::cos(std::numbers::pi * t));
}

EarlyStopping::EarlyStopping(std::size_t patience) : patience_(patience) {
  if (patience == 0) throw std::invalid_argument("early stopping patience must be >= 1");
}

bool EarlyStopping::observe(double metric) {
  if (metric < best_) {
    best_ = metric;
    stagnant_ = 0;
    return true;
  }
  ++stagnant_;
  return false;
}

}  // namespace okwugbe::train
