#include "softcoord/controllers.hpp"

namespace softcoord {

RsacController::RsacController(AgentParams params) : params_(std::move(params)) {}

void RsacController::begin_episode(const Environment& env) {
  encoder_.emplace(env.model(), env.config().ldc);
  if (encoder_->state_size() != params_.state_size() || encoder_->action_size() != params_.action_size()) {
    throw std::invalid_argument("policy was trained for a different network layout");
  }
  hidden_ = nn::RowVector::Zero(params_.hidden_size());
  prev_action_ = Eigen::VectorXd::Zero(params_.action_size());
}

Action RsacController::act(const Environment& env, const MarkovState& state, std::size_t /*t*/) {
  if (!encoder_) begin_episode(env);
  const auto draw = sample_action(params_.actor, encoder_->encode_state(state), encoder_->encode_action(prev_action_),
                                  hidden_, nn::RowVector::Zero(params_.action_size()), encoder_->q_max_pu());
  Action a{encoder_->decode_action(draw.mean_unit)};
  hidden_ = draw.hidden;
  prev_action_ = a.q_kvar;
  return a;
}

ControllerSpec ControllerSpec::parse(const std::string& text) {
  ControllerSpec spec;
  const auto colon = text.find(':');
  spec.name = text.substr(0, colon);
  if (colon != std::string::npos) spec.checkpoint = text.substr(colon + 1);
  if (spec.name == "rsac") {
    if (spec.checkpoint.empty()) throw std::invalid_argument("rsac controller needs a checkpoint: rsac:PATH");
  } else if (spec.name == "none" || spec.name == "droop" || spec.name == "constant-pcc") {
    if (!spec.checkpoint.empty()) throw std::invalid_argument("controller '" + spec.name + "' takes no checkpoint");
  } else {
    throw std::invalid_argument("unknown controller '" + spec.name + "'");
  }
  return spec;
}

std::string ControllerSpec::to_string() const {
  return checkpoint.empty() ? name : name + ":" + checkpoint.string();
}

std::unique_ptr<Controller> make_controller(const ControllerSpec& spec, double pcc_v_ref) {
  if (spec.name == "none") return std::make_unique<NoVarController>();
  if (spec.name == "droop") return std::make_unique<DroopController>();
  if (spec.name == "constant-pcc") return std::make_unique<ConstantPccController>(pcc_v_ref);
  if (spec.name == "rsac") {
    return std::make_unique<RsacController>(from_checkpoint(nn::Checkpoint::read(spec.checkpoint)));
  }
  throw std::invalid_argument("unknown controller '" + spec.name + "'");
}

}  // namespace softcoord
