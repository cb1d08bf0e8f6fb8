#pragma once

#include "vidagents/error.hpp"
#include "vidagents/text.hpp"
#include "vidagents/io.hpp"
#include "vidagents/runtime.hpp"
#include "vidagents/ingestion.hpp"
#include "vidagents/ontology.hpp"
#include "vidagents/synonyms.hpp"
#include "vidagents/classification.hpp"
#include "vidagents/knowledge_base.hpp"
#include "vidagents/personalization.hpp"
#include "vidagents/query_pipeline.hpp"
#include "vidagents/engine.hpp"
#include "vidagents/gateway.hpp"
#include "vidagents/harness.hpp"
