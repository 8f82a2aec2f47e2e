#pragma once

#include <ostream>
#include <string>

#include "batchsym/sim/simulator.h"

namespace batchsym::sim {

// `request_id,model,arrival_ns,dispatch_ns,start_ns,finish_ns,batch_size,outcome`
// Undispatched requests leave the dispatch/start/finish cells empty.
void WriteRequestsCsv(const RunResult& result, std::ostream& out);

// `event_time_ns,event_kind,model,gpu,batch_size,start_ns,finish_ns,request_ids`
void WriteTraceCsv(const RunResult& result, std::ostream& out);

std::string RequestsCsv(const RunResult& result);
std::string TraceCsv(const RunResult& result);

// Writes to a sibling temp file, then renames over `path`.
void WriteFileAtomic(const std::string& path, const std::string& content);

}  // namespace batchsym::sim
