#pragma once

#include "softcoord/baselines.hpp"
#include "softcoord/rsac.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

namespace softcoord {

/// Trained recurrent policy acting on its mean: A_t = q_max * tanh(mu_t).
/// The hidden state starts at zero each episode.
class RsacController final : public Controller {
 public:
  explicit RsacController(AgentParams params);
  std::string name() const override { return "rsac"; }
  void begin_episode(const Environment& env) override;
  Action act(const Environment& env, const MarkovState& state, std::size_t t) override;

 private:
  AgentParams params_;
  std::optional<FeatureEncoder> encoder_;
  nn::RowVector hidden_;
  Eigen::VectorXd prev_action_;
};

/// `none`, `droop`, `constant-pcc`, or `rsac:CHECKPOINT`.
struct ControllerSpec {
  std::string name;
  std::filesystem::path checkpoint;

  static ControllerSpec parse(const std::string& text);
  std::string to_string() const;
};

/// Throws std::invalid_argument for unknown names and
/// nn::CheckpointError for unreadable checkpoints.
std::unique_ptr<Controller> make_controller(const ControllerSpec& spec, double pcc_v_ref = 1.0);

}  // namespace softcoord
