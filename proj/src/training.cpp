#include "softcoord/csv.hpp"
#include "softcoord/rsac.hpp"

#include <deque>
#include <numeric>

namespace softcoord {

void write_training_log_header(std::ostream& out) {
  out << "episode,total_reward,avg50_reward,jq,jv,jpi,buffer_size,taps_in_episode,violation_steps\n";
}

void write_training_log_row(std::ostream& out, const TrainingLogRow& row) {
  out << row.episode << ',' << csv::format(row.total_reward) << ',' << csv::format(row.avg50_reward) << ',';
  if (row.losses) {
    out << csv::format(row.losses->jq) << ',' << csv::format(row.losses->jv) << ',' << csv::format(row.losses->jpi);
  } else {
    out << ",,";
  }
  out << ',' << row.buffer_size << ',' << row.taps << ',' << row.violation_steps << '\n';
}

TrainingResult run_training(const TrainingSetup& setup, const CheckpointSink& sink, std::ostream* log) {
  const Hyperparams& hp = setup.hp;
  hp.validate();
  const FeatureEncoder encoder(setup.model, setup.env.ldc);
  const auto na = encoder.action_size();

  Rng init_rng = make_stream(hp.seed, "init");
  Rng episode_rng = make_stream(hp.seed, "episodes");
  Rng policy_rng = make_stream(hp.seed, "policy");
  Rng update_rng = make_stream(hp.seed, "updates");
  std::normal_distribution<double> normal;

  TrainingResult result;
  result.agent.params = AgentParams::create(encoder.state_size(), na, hp, init_rng);
  auto& agent = result.agent;
  ReplayBuffer buffer(hp.buffer_capacity);
  if (log) write_training_log_header(*log);
  if (sink) sink(0, agent.params);

  std::deque<double> recent;
  for (std::size_t episode = 0; episode < hp.episodes; ++episode) {
    const std::uint64_t day_seed = episode_rng();
    DayScenario day = setup.fixed_day ? *setup.fixed_day
                                      : make_day_scenario(setup.model, setup.scenario, setup.dt_s, day_seed);
    if (hp.horizon > day.steps()) throw std::invalid_argument("horizon longer than the scenario day");
    Environment env(setup.model, std::move(day), setup.env);
    std::uniform_int_distribution<std::size_t> pick_start(0, env.scenario().steps() - hp.horizon);
    const std::size_t start = pick_start(episode_rng);
    MarkovState state = env.reset(env.settled_tap(start), start, hp.horizon);

    TrainingLogRow row;
    row.episode = episode;
    Eigen::VectorXd prev_action = Eigen::VectorXd::Zero(na);
    nn::RowVector hidden = nn::RowVector::Zero(hp.gru_hidden);
    nn::RowVector eps(na);
    for (std::size_t t = start; t < env.end_step(); ++t) {
      for (Eigen::Index j = 0; j < na; ++j) eps[j] = normal(policy_rng);
      const auto draw = sample_action(agent.params.actor, encoder.encode_state(state),
                                      encoder.encode_action(prev_action), hidden, eps, encoder.q_max_pu());
      const Action action{encoder.decode_action(draw.unit)};
      const StepOutcome out = env.step(action, t);

      Transition tr;
      tr.state = state;
      tr.prev_action = prev_action;
      tr.prev_hidden = hidden.transpose();
      tr.action = action.q_kvar;
      tr.reward = out.reward;
      tr.next_state = out.next;
      tr.hidden = draw.hidden.transpose();
      tr.episode = episode;
      tr.step = t;
      tr.done = out.done;
      buffer.push(std::move(tr));

      row.total_reward += out.reward;
      row.taps += out.tap_delta != 0 ? 1 : 0;
      row.violation_steps += out.violation ? 1 : 0;
      state = out.next;
      prev_action = action.q_kvar;
      hidden = draw.hidden;
    }

    if (buffer.size() >= hp.batch_size && hp.updates_per_episode > 0) {
      LossReport mean;
      for (std::size_t k = 0; k < hp.updates_per_episode; ++k) {
        const auto r = train_step(buffer, agent, hp, encoder, update_rng);
        mean.jq += r.jq, mean.jv += r.jv, mean.jpi += r.jpi;
      }
      const auto n = static_cast<double>(hp.updates_per_episode);
      row.losses = LossReport{mean.jq / n, mean.jv / n, mean.jpi / n};
    }

    recent.push_back(row.total_reward);
    if (recent.size() > 50) recent.pop_front();
    row.avg50_reward = std::accumulate(recent.begin(), recent.end(), 0.0) / static_cast<double>(recent.size());
    row.buffer_size = buffer.size();
    if (log) {
      write_training_log_row(*log, row);
      log->flush();
    }
    result.log.push_back(row);

    const std::size_t done = episode + 1;
    if (sink && (done == hp.episodes || (hp.checkpoint_every > 0 && done % hp.checkpoint_every == 0))) {
      sink(done, agent.params);
    }
  }
  return result;
}

}  // namespace softcoord
