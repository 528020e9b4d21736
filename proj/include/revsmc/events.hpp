#pragma once

#include <string>

namespace revsmc {

// Pluggable sink for engine and baseline diagnostics. All callbacks are
// invoked from the thread driving the run, never concurrently.
class EventSink {
 public:
  virtual ~EventSink() = default;

  // a level barrier was reached; ess is the pre-resampling value
  virtual void level_crossed(int level, double ess, bool resampled) {
    (void)level;
    (void)ess;
    (void)resampled;
  }
  virtual void particle_zeroed(int slot, const std::string& reason) {
    (void)slot;
    (void)reason;
  }
  virtual void degeneracy(const std::string& where) { (void)where; }
  // adaptive splitting level trace
  virtual void splitting_level(long iteration, double level) {
    (void)iteration;
    (void)level;
  }
};

inline EventSink& null_sink() {
  static EventSink sink;
  return sink;
}

}  // namespace revsmc
