#include "runner.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "io.hpp"

namespace rcm4::tools {

namespace fs = std::filesystem;

std::string ChainJob::fingerprint() const {
  std::ostringstream os;
  os << label << '|' << N << '|' << delta << '|' << bc.name() << '|' << schedule.burn_in << '|'
     << schedule.n_samples << '|' << schedule.thin << '|' << seed << '|' << chain_index << '|' << fingerprint_salt;
  for (const std::string& c : columns) os << '|' << c;
  return sha256_hex(os.str()).substr(0, 16);
}

const std::vector<double>& ChainOutput::column(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return series[i];
  }
  throw std::out_of_range("no column " + name + " in " + label);
}

namespace {

struct Progress {
  int burn_done = 0;
  int samples_done = 0;
  double seconds = 0.0;  // chain time spent before this process took over
};

fs::path checkpoint_path(const ChainJob& job) {
  std::string safe = job.label;
  for (char& c : safe) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') c = '_';
  }
  return job.checkpoint_dir / (safe + ".ckpt");
}

void save_checkpoint(const ChainJob& job, const Chain& chain, const Progress& p,
                     const std::vector<std::vector<double>>& series) {
  std::ostringstream os;
  os << "rcm4-checkpoint v2\n";
  os << "fingerprint " << job.fingerprint() << "\n";
  char secs[64];
  std::snprintf(secs, sizeof secs, "%a", p.seconds);
  os << "burn_done " << p.burn_done << "\nsamples_done " << p.samples_done << "\nseconds " << secs << "\ncolumns "
     << series.size() << "\n";
  chain.save(os);
  os << "series\n";
  char buf[64];
  for (int s = 0; s < p.samples_done; ++s) {
    for (std::size_t c = 0; c < series.size(); ++c) {
      std::snprintf(buf, sizeof buf, "%a", series[c][s]);
      os << (c ? " " : "") << buf;
    }
    os << "\n";
  }
  os << "end\n";
  write_file_atomic(checkpoint_path(job), os.str());
}

bool load_checkpoint(const ChainJob& job, Chain& chain, Progress& p, std::vector<std::vector<double>>& series) {
  const fs::path path = checkpoint_path(job);
  if (!fs::exists(path)) return false;
  std::ifstream in(path);
  std::string word, value;
  in >> word >> value;
  if (word != "rcm4-checkpoint" || value != "v2") return false;
  in >> word >> value;
  if (word != "fingerprint" || value != job.fingerprint()) return false;
  std::size_t columns = 0;
  std::string secs;
  in >> word >> p.burn_done >> word >> p.samples_done >> word >> secs >> word >> columns;
  p.seconds = std::strtod(secs.c_str(), nullptr);
  if (!in || columns != series.size()) return false;
  chain.load(in);
  in >> word;
  if (word != "series") throw std::runtime_error("checkpoint " + path.string() + " is truncated");
  for (int s = 0; s < p.samples_done; ++s) {
    for (std::size_t c = 0; c < columns; ++c) {
      in >> value;
      series[c].push_back(std::strtod(value.c_str(), nullptr));
    }
  }
  in >> word;
  if (!in || word != "end") throw std::runtime_error("checkpoint " + path.string() + " is truncated");
  return true;
}

}  // namespace

ChainOutput run_chain(const ChainJob& job, const Logger& log) {
  job.schedule.validate();
  if (!job.measure && !job.columns.empty()) throw std::invalid_argument("chain job has columns but no measure");
  const auto t0 = std::chrono::steady_clock::now();
  const Domain d(job.N, job.delta);
  Chain chain(d.graph(), job.bc, ModelParams::critical(), job.seed, job.chain_index);
  ChainOutput out;
  out.label = job.label;
  out.columns = job.columns;
  out.series.assign(job.columns.size(), {});
  for (auto& s : out.series) s.reserve(job.schedule.n_samples);

  const bool checkpoints = job.checkpoint_every > 0 && !job.checkpoint_dir.empty();
  Progress p;
  if (checkpoints && !job.sink) {
    out.resumed = load_checkpoint(job, chain, p, out.series);
    if (out.resumed && log) {
      log(job.label + ": resumed at burn-in " + std::to_string(p.burn_done) + ", sample " +
          std::to_string(p.samples_done));
    }
  }
  const bool complete_on_load = out.resumed && p.burn_done >= job.schedule.burn_in &&
                                p.samples_done >= job.schedule.n_samples;
  const double earlier = p.seconds;
  auto elapsed = [&] { return earlier + std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };
  int since_checkpoint = 0;
  auto maybe_checkpoint = [&](int swept) {
    if (!checkpoints) return;
    since_checkpoint += swept;
    if (since_checkpoint >= job.checkpoint_every) {
      p.seconds = elapsed();
      save_checkpoint(job, chain, p, out.series);
      since_checkpoint = 0;
    }
  };

  while (p.burn_done < job.schedule.burn_in) {
    const int step = std::min(job.schedule.burn_in - p.burn_done, checkpoints ? job.checkpoint_every : 1 << 30);
    chain.sweep(step);
    p.burn_done += step;
    maybe_checkpoint(step);
  }
  std::vector<double> row(job.columns.size());
  auto last_log = std::chrono::steady_clock::now();
  while (p.samples_done < job.schedule.n_samples) {
    chain.sweep(job.schedule.thin);
    if (job.measure) {
      std::fill(row.begin(), row.end(), 0.0);
      job.measure(d, chain.state(), row);
      for (std::size_t c = 0; c < row.size(); ++c) out.series[c].push_back(row[c]);
    }
    if (job.sink) job.sink(chain.state(), chain.stats().sweeps);
    ++p.samples_done;
    maybe_checkpoint(job.schedule.thin);
    if (log && std::chrono::steady_clock::now() - last_log > std::chrono::seconds(60)) {
      last_log = std::chrono::steady_clock::now();
      log(job.label + ": sample " + std::to_string(p.samples_done) + "/" + std::to_string(job.schedule.n_samples));
    }
  }
  p.seconds = elapsed();
  if (checkpoints && !complete_on_load) save_checkpoint(job, chain, p, out.series);
  out.sweeps = chain.stats().sweeps;
  out.seconds = p.seconds;
  return out;
}

std::vector<ChainOutput> run_chains(const std::vector<ChainJob>& jobs, int threads, const Logger& log) {
  std::vector<ChainOutput> out(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  std::mutex log_mutex;
  Logger safe_log;
  if (log) {
    safe_log = [&](const std::string& m) {
      std::lock_guard<std::mutex> lock(log_mutex);
      log(m);
    };
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        out[i] = run_chain(jobs[i], safe_log);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int n = std::max(1, std::min<int>(threads, static_cast<int>(jobs.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace rcm4::tools
