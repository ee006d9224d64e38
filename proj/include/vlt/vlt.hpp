#pragma once

// Everything except the HTTP service (vlt/service.hpp), which pulls in httplib.

#include "vlt/assignment.hpp"
#include "vlt/correspondence.hpp"
#include "vlt/error.hpp"
#include "vlt/geometry.hpp"
#include "vlt/optimizer.hpp"
#include "vlt/rules.hpp"
#include "vlt/session.hpp"
#include "vlt/svg.hpp"
#include "vlt/transfer.hpp"
#include "vlt/wire.hpp"
#include "vlt/xml.hpp"
