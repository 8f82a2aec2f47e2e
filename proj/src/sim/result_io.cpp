#include "batchsym/sim/result_io.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace batchsym::sim {

namespace {

void PutTime(std::ostream& out, TimePoint t) {
  if (t != kInfinitePast && t != kInfiniteFuture) out << Nanos(t);
}

}  // namespace

void WriteRequestsCsv(const RunResult& result, std::ostream& out) {
  out << "request_id,model,arrival_ns,dispatch_ns,start_ns,finish_ns,"
         "batch_size,outcome\n";
  for (const auto& r : result.requests) {
    out << r.id << ',' << result.model_names.at(r.model) << ','
        << Nanos(r.arrival) << ',';
    PutTime(out, r.dispatch);
    out << ',';
    PutTime(out, r.start);
    out << ',';
    PutTime(out, r.finish);
    out << ',' << r.batch_size << ',' << OutcomeName(r.outcome) << '\n';
  }
}

void WriteTraceCsv(const RunResult& result, std::ostream& out) {
  out << "event_time_ns,event_kind,model,gpu,batch_size,start_ns,finish_ns,"
         "request_ids\n";
  for (const auto& e : result.trace) {
    out << Nanos(e.at) << ',' << TraceKindName(e.kind) << ','
        << result.model_names.at(e.model) << ',';
    if (e.gpu) out << *e.gpu;
    out << ',' << e.batch_size << ',';
    PutTime(out, e.start);
    out << ',';
    PutTime(out, e.finish);
    out << ',';
    for (size_t i = 0; i < e.requests.size(); ++i) {
      if (i) out << ';';
      out << e.requests[i];
    }
    out << '\n';
  }
}

std::string RequestsCsv(const RunResult& result) {
  std::ostringstream s;
  WriteRequestsCsv(result, s);
  return s.str();
}

std::string TraceCsv(const RunResult& result) {
  std::ostringstream s;
  WriteTraceCsv(result, s);
  return s.str();
}

void WriteFileAtomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw std::runtime_error("cannot rename to '" + path + "': " + ec.message());
  }
}

}  // namespace batchsym::sim
