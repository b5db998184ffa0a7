#pragma once

#include "ndnreuse/bench.hpp"
#include "ndnreuse/config.hpp"
#include "ndnreuse/csv.hpp"
#include "ndnreuse/descriptor.hpp"
#include "ndnreuse/hnsw.hpp"
#include "ndnreuse/image.hpp"
#include "ndnreuse/model.hpp"
#include "ndnreuse/ndn.hpp"
#include "ndnreuse/report.hpp"
#include "ndnreuse/sim.hpp"
#include "ndnreuse/similarity_cache.hpp"
#include "ndnreuse/validation.hpp"
#include "ndnreuse/workload.hpp"
