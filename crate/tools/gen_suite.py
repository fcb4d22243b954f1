#!/usr/bin/env python3
"""Writes suite/: requirements.txt, links.txt, suite.json and cases/*.tc.

Run from the repository root. Every Detail requirement is linked to exactly
one test case, every Intermediate requirement to one test run and every High
requirement to one build.
"""

import json
import os
import sys

ROOT = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "suite")

DOORS = ["set DOOR_CLOSED_1 1", "set DOOR_CLOSED_2 1"]
SEARCH_1 = ["set SEARCH_BTN_1 1", "wait 10ms", "set SEARCH_BTN_1 0"]
SEARCH_2 = ["set SEARCH_BTN_2 1", "wait 10ms", "set SEARCH_BTN_2 0"]
SECURE = DOORS + SEARCH_1 + SEARCH_2 + [
    "set SECURE_KEY 1",
    "expect state ACCESS == SECURED within 20ms",
]
BEAM = SECURE + [
    "set BEAM_REQ 1",
    "expect SHUTTER_PERMIT == 1 within 20ms",
]
PERMITS_OFF = [
    "expect SHUTTER_PERMIT == 0 within 10ms",
    "expect SHUTTER_PERMIT_A == 0 within 10ms",
    "expect SHUTTER_PERMIT_B == 0 within 10ms",
]


def hold(ms, checks):
    """Wait ms, then check each expectation immediately."""
    return ["wait %dms" % ms] + [c + " within 10ms" for c in checks]


BUILDS = [
    ("B-1", "Access sequencing", "Search, secure and beam permit sequencing",
     ["TR-1", "TR-2", "TR-3"]),
    ("B-2", "Trips and faults", "Trips, fault latching and fault recovery",
     ["TR-4", "TR-5", "TR-6"]),
]

RUNS = {
    "TR-1": ("Reset state and ignored inputs",
             "The station starts fail-safe and ignores out-of-sequence inputs"),
    "TR-2": ("Search sequence", "The two-button search sequence and its time window"),
    "TR-3": ("Secure and beam permit", "Securing the station and granting the shutter permit"),
    "TR-4": ("Door and e-stop trips", "Door and emergency-stop trips and recovery"),
    "TR-5": ("Fault injection and reset", "Chain faults force the voted outputs off"),
    "TR-6": ("Redundant contacts and timeouts",
             "Door contact discrepancy detection and sequence timeouts"),
}

# (title, [detail requirement texts], steps)
CASES = {
    "TR-1": [
        ("Permits are off after reset",
         ["The combined shutter permit shall be off after a station reset.",
          "Each chain's shutter permit shall be off after a station reset.",
          "The permits shall stay off while no input is asserted."],
         PERMITS_OFF + hold(100, ["expect SHUTTER_PERMIT == 0"])),
        ("Indicators are dark after reset",
         ["Search and secured indicators of both chains shall be off after reset.",
          "The warning beacon and door lock shall be off after reset.",
          "Fault indicators of both chains shall be off after reset."],
         ["expect SEARCH_LED_A == 0 within 10ms", "expect SEARCH_LED_B == 0 within 10ms",
          "expect SECURED_LED_A == 0 within 10ms", "expect SECURED_LED_B == 0 within 10ms",
          "expect SECURED_LED == 0 within 10ms", "expect WARNING_BEACON == 0 within 10ms",
          "expect DOOR_LOCK == 0 within 10ms", "expect FAULT_LED_A == 0 within 10ms",
          "expect FAULT_LED_B == 0 within 10ms"]),
        ("Sequence starts idle with no faults",
         ["The access task shall start in IDLE.",
          "Both fault registers shall read NO_FAULT after reset."],
         ["expect state ACCESS == IDLE within 10ms",
          "expect fault A == NO_FAULT within 10ms", "expect fault B == NO_FAULT within 10ms",
          "wait 50ms", "expect state ACCESS == IDLE within 10ms"]),
        ("Closing the doors alone starts nothing",
         ["Closing both doors without a search shall not leave IDLE.",
          "Closing both doors shall not light the search indicators."],
         DOORS + hold(500, ["expect state ACCESS == IDLE", "expect SEARCH_LED_A == 0",
                            "expect SEARCH_LED_B == 0", "expect SHUTTER_PERMIT == 0"])),
        ("Beam request without a secured station is ignored",
         ["A beam request in IDLE shall not turn on any shutter permit.",
          "A beam request in IDLE shall not change the access state."],
         DOORS + ["set BEAM_REQ 1"] + hold(200, ["expect SHUTTER_PERMIT_A == 0",
                                                 "expect SHUTTER_PERMIT_B == 0",
                                                 "expect state ACCESS == IDLE"])),
        ("Secure key without a search is ignored",
         ["Turning the secure key in IDLE shall not secure the station.",
          "Turning the secure key in IDLE shall not lock the doors."],
         DOORS + ["set SECURE_KEY 1"] + hold(200, ["expect SECURED_LED == 0",
                                                   "expect DOOR_LOCK == 0",
                                                   "expect state ACCESS == IDLE"])),
        ("Second search button first is ignored",
         ["Pressing search button 2 in IDLE shall not start a search.",
          "Search button 1 shall still start a search after an out-of-order press of button 2."],
         DOORS + SEARCH_2 + hold(100, ["expect state ACCESS == IDLE", "expect SEARCH_LED_A == 0"])
         + SEARCH_1 + ["expect state ACCESS == SEARCH_1 within 10ms"]),
        ("Search refused with a door open",
         ["A search shall not start while door contact 1 reports open.",
          "A search shall not start while door contact 2 reports open."],
         ["set DOOR_CLOSED_1 1"] + SEARCH_1 + hold(50, ["expect state ACCESS == IDLE"])
         + ["set DOOR_CLOSED_1 0", "set DOOR_CLOSED_2 1"] + SEARCH_1
         + hold(40, ["expect state ACCESS == IDLE", "expect SEARCH_LED_B == 0"])),
        ("Search refused with an e-stop pressed",
         ["A search shall not start while an emergency stop is pressed.",
          "Pressing the user emergency stop shall latch ESTOP_LATCH on both chains.",
          "The fault indicators shall light while ESTOP_LATCH is held."],
         DOORS + ["set ESTOP_USER 1"] + SEARCH_1 +
         ["expect fault A == ESTOP_LATCH within 10ms", "expect fault B == ESTOP_LATCH within 10ms",
          "expect state ACCESS == IDLE within 10ms", "expect FAULT_LED_A == 1 within 10ms",
          "expect FAULT_LED_B == 1 within 10ms"]),
        ("Reset button in idle has no effect",
         ["The reset button shall have no effect in IDLE.",
          "The reset button shall not clear or raise faults."],
         DOORS + ["set RESET_BTN 1"] + hold(100, ["expect state ACCESS == IDLE",
                                                  "expect fault A == NO_FAULT",
                                                  "expect fault B == NO_FAULT"])),
        ("Station reset abandons a search",
         ["A station reset shall return the access task to IDLE from any state.",
          "A station reset shall turn off the search indicators."],
         DOORS + SEARCH_1 + ["expect SEARCH_LED_A == 1 within 10ms", "reset station",
                             "expect state ACCESS == IDLE within 10ms",
                             "expect SEARCH_LED_A == 0 within 10ms",
                             "expect SEARCH_LED_B == 0 within 10ms"]),
        ("Outputs are stable over a long idle period",
         ["Outputs shall not change over 10 s of unchanged inputs.",
          "The door lock shall stay released while the station is not secured."],
         DOORS + hold(10000, ["expect SHUTTER_PERMIT == 0", "expect DOOR_LOCK == 0",
                              "expect WARNING_BEACON == 0", "expect state ACCESS == IDLE"])),
    ],
    "TR-2": [
        ("Search button 1 starts the search",
         ["Search button 1 with doors closed shall move the access task to SEARCH_1.",
          "Both chains' search indicators shall light within one scan of the press."],
         DOORS + ["set SEARCH_BTN_1 1", "expect SEARCH_LED_A == 1 within 10ms",
                  "expect SEARCH_LED_B == 1 within 10ms",
                  "expect state ACCESS == SEARCH_1 within 10ms"]),
        ("Warning beacon during search",
         ["The warning beacon shall be on while both chains are searching.",
          "The warning beacon shall go off when the search is abandoned by a station reset."],
         DOORS + SEARCH_1 + ["expect WARNING_BEACON == 1 within 10ms", "reset station",
                             "expect WARNING_BEACON == 0 within 10ms"]),
        ("Search button 2 advances the search",
         ["Search button 2 in SEARCH_1 shall move the access task to SEARCH_2.",
          "Search indicators shall stay lit in SEARCH_2."],
         DOORS + SEARCH_1 + SEARCH_2 + ["expect state ACCESS == SEARCH_2 within 10ms",
                                        "expect SEARCH_LED_A == 1 within 10ms",
                                        "expect SEARCH_LED_B == 1 within 10ms"]),
        ("Search buttons held together",
         ["Holding both search buttons from IDLE shall take one step per scan.",
          "The search shall reach SEARCH_2 in two scans when both buttons are held."],
         DOORS + ["set SEARCH_BTN_1 1", "set SEARCH_BTN_2 1", "wait 10ms",
                  "expect state ACCESS == SEARCH_1 within 10ms",
                  "expect state ACCESS == SEARCH_2 within 10ms"]),
        ("Search window expires",
         ["SEARCH_1 shall return to IDLE if search button 2 is not pressed within 30 s.",
          "Search indicators shall go off when the search window expires.",
          "An expired search window shall not latch a fault."],
         DOORS + SEARCH_1 + hold(29980, ["expect state ACCESS == SEARCH_1"])
         + ["expect state ACCESS == IDLE within 20ms", "expect SEARCH_LED_A == 0 within 10ms",
            "expect SEARCH_LED_B == 0 within 10ms", "expect fault A == NO_FAULT within 10ms"]),
        ("Search button 2 late in the window",
         ["Search button 2 pressed just before the window expires shall still advance the search.",
          "Both chains shall agree on the late advance."],
         DOORS + SEARCH_1 + ["wait 29970ms"] + SEARCH_2 +
         ["expect state ACCESS == SEARCH_2 within 10ms", "expect SEARCH_LED_B == 1 within 10ms"]
         + hold(100, ["expect SEARCH_LED_B == 1"])),
        ("SEARCH_2 has no time limit",
         ["SEARCH_2 shall persist without a time limit until the key is turned or a trip occurs.",
          "Search indicators shall stay lit for the whole of SEARCH_2."],
         DOORS + SEARCH_1 + SEARCH_2 + hold(60000, ["expect state ACCESS == SEARCH_2",
                                                    "expect SEARCH_LED_A == 1",
                                                    "expect SEARCH_LED_B == 1"])),
        ("Door opened during SEARCH_1 trips",
         ["Opening a door in SEARCH_1 shall move the access task to TRIPPED.",
          "A trip shall turn the search indicators off."],
         DOORS + SEARCH_1 + ["set DOOR_CLOSED_1 0", "expect state ACCESS == TRIPPED within 10ms",
                             "expect SEARCH_LED_A == 0 within 10ms",
                             "expect SEARCH_LED_B == 0 within 10ms"]),
        ("Door opened during SEARCH_2 trips",
         ["Opening a door in SEARCH_2 shall move the access task to TRIPPED.",
          "Both chains shall drop their search indicators on a SEARCH_2 trip."],
         DOORS + SEARCH_1 + SEARCH_2 + ["set DOOR_CLOSED_2 0",
                                        "expect state ACCESS == TRIPPED within 10ms",
                                        "expect WARNING_BEACON == 0 within 10ms",
                                        "expect SEARCH_LED_B == 0 within 10ms"]),
        ("E-stop during search trips and latches",
         ["Pressing the door emergency stop in SEARCH_1 shall trip the sequence.",
          "Pressing the door emergency stop shall latch ESTOP_LATCH on both chains."],
         DOORS + SEARCH_1 + ["set ESTOP_DOOR 1", "expect state ACCESS == TRIPPED within 10ms",
                             "expect fault A == ESTOP_LATCH within 10ms",
                             "expect fault B == ESTOP_LATCH within 10ms"]),
        ("Search button 1 again has no effect",
         ["Pressing search button 1 again in SEARCH_1 shall not restart the search.",
          "Pressing search button 1 in SEARCH_2 shall not move the sequence back."],
         DOORS + SEARCH_1 + SEARCH_1 + hold(10, ["expect state ACCESS == SEARCH_1"])
         + SEARCH_2 + SEARCH_1 + hold(10, ["expect state ACCESS == SEARCH_2"])),
        ("Search indicators clear once secured",
         ["Search indicators shall turn off when the station is secured.",
          "The warning beacon shall turn off when the station is secured."],
         SECURE + ["expect SEARCH_LED_A == 0 within 10ms", "expect SEARCH_LED_B == 0 within 10ms",
                   "expect WARNING_BEACON == 0 within 10ms"]),
    ],
    "TR-3": [
        ("Secure key completes the search",
         ["Turning the secure key in SEARCH_2 shall move the access task to SECURED.",
          "The secured indicator of each chain shall light when secured.",
          "The door lock shall engage when both chains are secured."],
         SECURE + ["expect SECURED_LED_A == 1 within 10ms", "expect SECURED_LED_B == 1 within 10ms",
                   "expect DOOR_LOCK == 1 within 10ms"]),
        ("Beam request grants the permit",
         ["A beam request in SECURED shall turn on both chains' shutter permits.",
          "The combined shutter permit shall turn on when both chains permit and neither is faulted."],
         SECURE + ["set BEAM_REQ 1", "expect SHUTTER_PERMIT_A == 1 within 10ms",
                   "expect SHUTTER_PERMIT_B == 1 within 10ms",
                   "expect SHUTTER_PERMIT == 1 within 10ms",
                   "expect state ACCESS == BEAM_PERMIT within 10ms"]),
        ("Releasing the beam request withdraws the permit",
         ["Releasing the beam request shall turn off the shutter permit within one scan.",
          "Releasing the beam request shall return the sequence to SECURED."],
         BEAM + ["set BEAM_REQ 0"] + PERMITS_OFF +
         ["expect state ACCESS == SECURED within 10ms", "expect SECURED_LED == 1 within 10ms"]),
        ("Key removed while secured",
         ["Removing the secure key in SECURED shall return the access task to IDLE.",
          "Removing the secure key shall release the door lock."],
         SECURE + ["set SECURE_KEY 0", "expect state ACCESS == IDLE within 10ms",
                   "expect DOOR_LOCK == 0 within 10ms", "expect SECURED_LED_B == 0 within 10ms"]),
        ("Key removed during beam",
         ["Removing the secure key during beam shall turn off every shutter permit within one scan.",
          "Removing the secure key during beam shall return the access task to IDLE."],
         BEAM + ["set SECURE_KEY 0"] + PERMITS_OFF +
         ["expect state ACCESS == IDLE within 10ms"]),
        ("Beam requested before securing",
         ["A beam request held before securing shall not permit until the station is secured.",
          "A held beam request shall be granted on the scan after the station is secured."],
         DOORS + ["set BEAM_REQ 1"] + SEARCH_1 + SEARCH_2 +
         ["expect SHUTTER_PERMIT == 0 within 10ms", "set SECURE_KEY 1",
          "expect state ACCESS == SECURED within 10ms",
          "expect SHUTTER_PERMIT == 0 within 10ms",
          "expect SHUTTER_PERMIT == 1 within 10ms"]),
        ("Beam request cycled",
         ["The shutter permit shall follow repeated beam requests while secured.",
          "Cycling the beam request shall not leave the secured state."],
         BEAM + ["set BEAM_REQ 0", "expect SHUTTER_PERMIT == 0 within 10ms",
                 "set BEAM_REQ 1", "expect SHUTTER_PERMIT == 1 within 10ms",
                 "set BEAM_REQ 0", "expect SHUTTER_PERMIT == 0 within 10ms",
                 "set BEAM_REQ 1", "expect SHUTTER_PERMIT == 1 within 10ms",
                 "expect SECURED_LED == 1 within 10ms"]),
        ("Key turned in SEARCH_1 is ignored",
         ["Turning the secure key in SEARCH_1 shall not secure the station.",
          "The secured indicators shall stay off until the search is complete."],
         DOORS + SEARCH_1 + ["set SECURE_KEY 1"] +
         hold(100, ["expect state ACCESS == SEARCH_1", "expect SECURED_LED_A == 0",
                    "expect SECURED_LED_B == 0"])),
        ("Secured state holds indefinitely",
         ["SECURED shall persist without a time limit while the key is held and doors are closed.",
          "The door lock shall stay engaged for as long as the station is secured."],
         SECURE + hold(60000, ["expect state ACCESS == SECURED", "expect DOOR_LOCK == 1",
                               "expect SHUTTER_PERMIT == 0"])),
        ("Second sequence after key removal",
         ["After the key is removed a new full search shall be required to secure again.",
          "A repeated search and secure sequence shall grant the permit again."],
         BEAM + ["set SECURE_KEY 0", "set BEAM_REQ 0", "expect state ACCESS == IDLE within 10ms",
                 "set SECURE_KEY 1"] + hold(50, ["expect SECURED_LED == 0"]) +
         ["set SECURE_KEY 0"] + SEARCH_1 + SEARCH_2 +
         ["set SECURE_KEY 1", "set BEAM_REQ 1", "expect SHUTTER_PERMIT == 1 within 30ms"]),
        ("Combined secured indicator",
         ["The combined secured indicator shall be on when both chains are secured.",
          "The combined secured indicator shall stay on during beam."],
         BEAM + ["expect SECURED_LED == 1 within 10ms", "expect SECURED_LED_A == 1 within 10ms",
                 "expect SECURED_LED_B == 1 within 10ms"]),
        ("Beam permit is the only permitting state",
         ["The shutter permit shall be off in SECURED without a beam request.",
          "The shutter permit shall be off throughout the search sequence."],
         DOORS + SEARCH_1 + ["expect SHUTTER_PERMIT == 0 within 10ms"] + SEARCH_2 +
         ["expect SHUTTER_PERMIT == 0 within 10ms", "set SECURE_KEY 1",
          "expect state ACCESS == SECURED within 10ms"] +
         hold(100, ["expect SHUTTER_PERMIT == 0", "expect SHUTTER_PERMIT_A == 0",
                    "expect SHUTTER_PERMIT_B == 0"])),
    ],
    "TR-4": [
        ("Door 1 opened during beam",
         ["Opening door 1 during beam shall turn off the combined shutter permit within two scans.",
          "Opening door 1 during beam shall turn off both chains' permits."],
         BEAM + ["set DOOR_CLOSED_1 0", "expect SHUTTER_PERMIT == 0 within 20ms"] + PERMITS_OFF),
        ("Door 2 opened during beam",
         ["Opening door 2 during beam shall turn off every shutter permit within two scans.",
          "Opening door 2 during beam shall move the access task to TRIPPED."],
         BEAM + ["set DOOR_CLOSED_2 0", "expect SHUTTER_PERMIT == 0 within 20ms",
                 "expect state ACCESS == TRIPPED within 10ms"] + PERMITS_OFF),
        ("User e-stop during beam",
         ["Pressing the user emergency stop during beam shall turn off every shutter permit within one scan.",
          "Pressing the user emergency stop during beam shall latch ESTOP_LATCH on both chains."],
         BEAM + ["set ESTOP_USER 1"] + PERMITS_OFF +
         ["expect fault A == ESTOP_LATCH within 10ms", "expect fault B == ESTOP_LATCH within 10ms"]),
        ("Door e-stop during beam",
         ["Pressing the door emergency stop during beam shall turn off every shutter permit within one scan.",
          "The door emergency stop shall light both fault indicators."],
         BEAM + ["set ESTOP_DOOR 1"] + PERMITS_OFF +
         ["expect FAULT_LED_A == 1 within 10ms", "expect FAULT_LED_B == 1 within 10ms"]),
        ("Door opened while secured",
         ["Opening a door in SECURED shall move the access task to TRIPPED.",
          "Opening a door in SECURED shall release the door lock."],
         SECURE + ["set DOOR_CLOSED_1 0", "expect state ACCESS == TRIPPED within 10ms",
                   "expect DOOR_LOCK == 0 within 10ms", "expect SECURED_LED == 0 within 10ms"]),
        ("Trip holds after the door closes again",
         ["TRIPPED shall hold after the tripping door is closed again.",
          "The shutter permit shall stay off in TRIPPED even with beam requested."],
         BEAM + ["set DOOR_CLOSED_1 0", "wait 20ms", "set DOOR_CLOSED_1 1"] +
         hold(500, ["expect state ACCESS == TRIPPED", "expect SHUTTER_PERMIT == 0",
                    "expect SHUTTER_PERMIT_B == 0"])),
        ("Reset button clears a trip",
         ["The reset button in TRIPPED shall return the access task to IDLE.",
          "Leaving TRIPPED shall not light any indicator."],
         SECURE + ["set DOOR_CLOSED_2 0", "wait 20ms", "set DOOR_CLOSED_2 1",
                   "expect state ACCESS == TRIPPED within 10ms", "set RESET_BTN 1",
                   "expect state ACCESS == IDLE within 10ms",
                   "expect SEARCH_LED_A == 0 within 10ms", "expect SECURED_LED == 0 within 10ms"]),
        ("Full sequence after trip recovery",
         ["After a trip and reset, a full search and secure sequence shall grant the permit.",
          "Both chains shall track the recovery sequence in step."],
         BEAM + ["set DOOR_CLOSED_1 0", "wait 20ms", "set DOOR_CLOSED_1 1", "set BEAM_REQ 0",
                 "set SECURE_KEY 0", "set RESET_BTN 1", "wait 10ms", "set RESET_BTN 0",
                 "expect state ACCESS == IDLE within 10ms"] + SEARCH_1 +
         ["expect SEARCH_LED_B == 1 within 10ms"] + SEARCH_2 +
         ["set SECURE_KEY 1", "set BEAM_REQ 1", "expect SHUTTER_PERMIT == 1 within 30ms"]),
        ("Held beam request after trip recovery",
         ["A beam request held through a trip and reset shall not grant the permit without a new search.",
          "The key held through a trip and reset shall not secure the station without a new search."],
         BEAM + ["set DOOR_CLOSED_1 0", "wait 20ms", "set DOOR_CLOSED_1 1", "set RESET_BTN 1",
                 "wait 10ms", "set RESET_BTN 0"] +
         hold(300, ["expect SHUTTER_PERMIT == 0", "expect SECURED_LED == 0",
                    "expect state ACCESS == IDLE"])),
        ("E-stop release does not clear the latch",
         ["Releasing an emergency stop shall not clear ESTOP_LATCH.",
          "Fault indicators shall stay lit until the fault is reset."],
         DOORS + ["set ESTOP_USER 1", "wait 20ms", "set ESTOP_USER 0"] +
         hold(200, ["expect fault A == ESTOP_LATCH", "expect fault B == ESTOP_LATCH",
                    "expect FAULT_LED_A == 1"])),
        ("Fault reset after e-stop release",
         ["A fault reset after the emergency stop is released shall clear ESTOP_LATCH on both chains.",
          "Fault indicators shall go off when the fault is reset."],
         DOORS + ["set ESTOP_USER 1", "wait 20ms", "set ESTOP_USER 0", "wait 10ms",
                  "reset faults", "expect fault A == NO_FAULT within 10ms",
                  "expect fault B == NO_FAULT within 10ms",
                  "expect FAULT_LED_A == 0 within 10ms", "expect FAULT_LED_B == 0 within 10ms"]),
        ("Fault reset with e-stop held",
         ["A fault reset while an emergency stop is still pressed shall leave ESTOP_LATCH latched.",
          "The shutter permit shall stay off while an emergency stop is pressed."],
         DOORS + ["set ESTOP_DOOR 1", "wait 20ms", "reset faults"] +
         hold(20, ["expect fault A == ESTOP_LATCH", "expect fault B == ESTOP_LATCH",
                   "expect SHUTTER_PERMIT == 0"])),
    ],
    "TR-5": [
        ("Chain A watchdog during beam",
         ["A fault latched on chain A during beam shall turn off the combined permit within one scan.",
          "A faulted chain A shall drive its own shutter permit off.",
          "A fault on chain A shall light FAULT_LED_A only."],
         BEAM + ["inject fault A WATCHDOG", "expect SHUTTER_PERMIT == 0 within 10ms",
                 "expect SHUTTER_PERMIT_A == 0 within 10ms", "expect FAULT_LED_A == 1 within 10ms",
                 "expect FAULT_LED_B == 0 within 10ms"]),
        ("Chain B watchdog during beam",
         ["A fault latched on chain B during beam shall turn off the combined permit within one scan.",
          "A faulted chain B shall drive its own shutter permit off.",
          "A fault on chain B shall light FAULT_LED_B only."],
         BEAM + ["inject fault B WATCHDOG", "expect SHUTTER_PERMIT == 0 within 10ms",
                 "expect SHUTTER_PERMIT_B == 0 within 10ms", "expect FAULT_LED_B == 1 within 10ms",
                 "expect FAULT_LED_A == 0 within 10ms"]),
        ("Healthy chain B keeps its own permit",
         ["A fault on chain A shall not alter chain B's own permit.",
          "The combined permit shall stay off while chain B alone permits."],
         BEAM + ["inject fault A SEARCH_TIMEOUT", "wait 10ms"] +
         hold(100, ["expect SHUTTER_PERMIT_B == 1", "expect SHUTTER_PERMIT == 0",
                    "expect fault A == SEARCH_TIMEOUT"])),
        ("Healthy chain A keeps its own permit",
         ["A fault on chain B shall not alter chain A's own permit.",
          "The combined permit shall stay off while chain A alone permits."],
         BEAM + ["inject fault B PROGRAM_HALT", "wait 10ms"] +
         hold(100, ["expect SHUTTER_PERMIT_A == 1", "expect SHUTTER_PERMIT == 0",
                    "expect fault B == PROGRAM_HALT"])),
        ("Faulted chain outputs read zero",
         ["Every program output of a faulted chain shall read 0.",
          "Combined indicators shall go off when one chain is faulted."],
         BEAM + ["inject fault A WATCHDOG", "wait 10ms",
                 "expect SECURED_LED_A == 0 within 10ms", "expect SEARCH_LED_A == 0 within 10ms",
                 "expect SECURED_LED == 0 within 10ms", "expect DOOR_LOCK == 0 within 10ms",
                 "expect SECURED_LED_B == 1 within 10ms"]),
        ("First fault wins",
         ["The first fault latched on a chain shall be kept when a second fault occurs.",
          "A second fault shall not change the other chain's register."],
         DOORS + ["inject fault A WATCHDOG", "inject fault A PROGRAM_HALT", "wait 10ms",
                  "expect fault A == WATCHDOG within 10ms", "expect fault B == NO_FAULT within 10ms"]),
        ("Fault reset clears an injected fault",
         ["A fault reset shall clear a chain fault whose cause is gone.",
          "A fault reset shall restart the access sequence from IDLE."],
         BEAM + ["inject fault A WATCHDOG", "wait 10ms", "reset faults",
                 "expect fault A == NO_FAULT within 10ms", "expect state ACCESS == IDLE within 10ms"]
         + hold(20, ["expect FAULT_LED_A == 0", "expect SHUTTER_PERMIT == 0"])),
        ("No permit after fault reset without a new search",
         ["After a fault reset the shutter permit shall require a new search and secure sequence.",
          "Held key and beam request shall not re-permit after a fault reset."],
         BEAM + ["inject fault B WATCHDOG", "wait 10ms", "reset faults"] +
         hold(200, ["expect SHUTTER_PERMIT == 0", "expect SHUTTER_PERMIT_A == 0",
                    "expect SHUTTER_PERMIT_B == 0"])),
        ("Both chains faulted freeze the sequence",
         ["A faulted chain shall not advance its sequence.",
          "With both chains faulted no indicator other than the fault indicators shall light."],
         DOORS + ["inject fault A WATCHDOG", "inject fault B WATCHDOG"] + SEARCH_1 +
         hold(50, ["expect SEARCH_LED_A == 0", "expect SEARCH_LED_B == 0",
                   "expect WARNING_BEACON == 0", "expect FAULT_LED_A == 1", "expect FAULT_LED_B == 1"])),
        ("Healthy chain B advances alone",
         ["The healthy chain shall continue its sequence while the other chain is faulted.",
          "A combined output shall stay off while only one chain drives it."],
         DOORS + ["inject fault A WATCHDOG"] + SEARCH_1 +
         ["expect SEARCH_LED_B == 1 within 10ms", "expect SEARCH_LED_A == 0 within 10ms",
          "expect WARNING_BEACON == 0 within 10ms"]),
        ("Fault reset clears both chains",
         ["A fault reset shall clear both chains' fault registers at once.",
          "After a fault reset both chains shall accept a new search."],
         DOORS + ["inject fault A PROGRAM_HALT", "inject fault B SEARCH_TIMEOUT", "wait 10ms",
                  "reset faults", "expect fault A == NO_FAULT within 10ms",
                  "expect fault B == NO_FAULT within 10ms"] + SEARCH_1 +
         ["expect WARNING_BEACON == 1 within 10ms"]),
        ("Injected discrepancy resets once contacts agree",
         ["A DISCREPANCY fault shall be cleared by a fault reset when the contacts agree.",
          "An injected fault shall latch without waiting for a scan."],
         DOORS + ["wait 10ms", "inject fault B DISCREPANCY",
                  "expect fault B == DISCREPANCY within 10ms", "wait 10ms", "reset faults",
                  "expect fault B == NO_FAULT within 10ms"]),
    ],
    "TR-6": [
        ("Short contact disagreement is tolerated",
         ["Door contacts disagreeing for up to 5 scans shall not latch a fault.",
          "A tolerated disagreement shall still keep the shutter permit off."],
         ["set DOOR_CLOSED_1 1"] + hold(50, ["expect fault A == NO_FAULT", "expect fault B == NO_FAULT",
                                             "expect SHUTTER_PERMIT == 0"])),
        ("Persistent disagreement latches DISCREPANCY",
         ["Door contacts disagreeing for more than 5 scans shall latch DISCREPANCY on both chains.",
          "DISCREPANCY shall latch on the 6th consecutive scan of disagreement."],
         ["set DOOR_CLOSED_1 1", "wait 50ms", "expect fault A == NO_FAULT within 10ms",
          "expect fault A == DISCREPANCY within 10ms", "expect fault B == DISCREPANCY within 10ms"]),
        ("Discrepancy lights the fault indicators",
         ["DISCREPANCY shall light both fault indicators.",
          "DISCREPANCY shall keep every permit off."],
         ["set DOOR_CLOSED_2 1", "wait 60ms", "expect FAULT_LED_A == 1 within 10ms",
          "expect FAULT_LED_B == 1 within 10ms"] + PERMITS_OFF),
        ("Disagreement during beam",
         ["A contact disagreement during beam shall drop the permit within one scan.",
          "A contact disagreement during beam shall latch DISCREPANCY after the window."],
         BEAM + ["set DOOR_CLOSED_2 0"] + PERMITS_OFF +
         ["expect fault A == DISCREPANCY within 60ms", "expect fault B == DISCREPANCY within 10ms"]),
        ("Agreement restarts the window",
         ["The discrepancy window shall restart when the contacts agree again.",
          "Two short disagreements separated by agreement shall not latch a fault."],
         ["set DOOR_CLOSED_1 1", "wait 40ms", "set DOOR_CLOSED_2 1", "wait 10ms",
          "set DOOR_CLOSED_2 0", "wait 40ms", "set DOOR_CLOSED_2 1"] +
         hold(20, ["expect fault A == NO_FAULT", "expect fault B == NO_FAULT"])),
        ("Fault reset while contacts disagree",
         ["A fault reset while the contacts still disagree shall leave DISCREPANCY latched.",
          "The fault indicators shall stay lit after a refused reset."],
         ["set DOOR_CLOSED_1 1", "wait 60ms", "expect fault A == DISCREPANCY within 10ms",
          "reset faults", "expect fault A == DISCREPANCY within 10ms",
          "expect fault B == DISCREPANCY within 10ms", "expect FAULT_LED_B == 1 within 10ms"]),
        ("Fault reset after contacts agree",
         ["A fault reset once the contacts agree shall clear DISCREPANCY.",
          "Clearing DISCREPANCY shall leave the sequence in IDLE."],
         ["set DOOR_CLOSED_1 1", "wait 60ms", "set DOOR_CLOSED_2 1", "wait 10ms", "reset faults",
          "expect fault A == NO_FAULT within 10ms", "expect fault B == NO_FAULT within 10ms",
          "expect state ACCESS == IDLE within 10ms"]),
        ("Disagreement in the other direction",
         ["Contact 2 closed with contact 1 open shall also latch DISCREPANCY.",
          "Contact disagreement shall be detected whichever contact is closed."],
         ["set DOOR_CLOSED_2 1", "expect fault B == DISCREPANCY within 60ms",
          "expect fault A == DISCREPANCY within 10ms"]),
        ("Full sequence after discrepancy recovery",
         ["After DISCREPANCY is cleared a full sequence shall grant the permit.",
          "A cleared DISCREPANCY shall not re-latch while the contacts agree."],
         ["set DOOR_CLOSED_1 1", "wait 60ms", "set DOOR_CLOSED_2 1", "wait 10ms", "reset faults"]
         + SEARCH_1 + SEARCH_2 + ["set SECURE_KEY 1", "set BEAM_REQ 1",
                                  "expect SHUTTER_PERMIT == 1 within 30ms"] +
         hold(100, ["expect fault A == NO_FAULT", "expect SHUTTER_PERMIT == 1"])),
        ("Disagreement during search trips first",
         ["A contact disagreement in SEARCH_1 shall trip the sequence on the next scan.",
          "The trip shall precede the DISCREPANCY latch."],
         DOORS + SEARCH_1 + ["set DOOR_CLOSED_1 0", "expect state ACCESS == TRIPPED within 10ms",
                             "expect fault A == NO_FAULT within 10ms",
                             "expect fault A == DISCREPANCY within 60ms"]),
        ("Discrepancy latch outlives the disagreement",
         ["DISCREPANCY shall stay latched after the contacts agree again.",
          "The permits shall stay off while DISCREPANCY is latched."],
         ["set DOOR_CLOSED_1 1", "wait 60ms", "set DOOR_CLOSED_2 1"] +
         hold(1000, ["expect fault A == DISCREPANCY", "expect fault B == DISCREPANCY",
                     "expect SHUTTER_PERMIT == 0"])),
        ("Search timeout is not a fault",
         ["An expired search window shall return both chains to IDLE together.",
          "An expired search window shall leave both fault registers clear.",
          "A new search shall be accepted right after the window expires."],
         DOORS + SEARCH_1 + ["wait 30000ms", "expect state ACCESS == IDLE within 10ms",
                             "expect SEARCH_LED_B == 0 within 10ms",
                             "expect fault A == NO_FAULT within 10ms",
                             "expect fault B == NO_FAULT within 10ms"] + SEARCH_1 +
         ["expect state ACCESS == SEARCH_1 within 10ms", "expect SEARCH_LED_B == 1 within 10ms"]),
    ],
}

HIGH = {
    "B-1": "The system shall permit beam only after the station has been searched and secured.",
    "B-2": "The system shall remove the beam permit on any trip or fault and keep it off until recovery.",
}


def main():
    cases_dir = os.path.join(ROOT, "cases")
    os.makedirs(cases_dir, exist_ok=True)
    for f in os.listdir(cases_dir):
        if f.endswith(".tc"):
            os.remove(os.path.join(cases_dir, f))
    reqs, links = [], []
    tree = {"builds": [], "runs": [], "cases": [], "case_dir": "cases"}
    n = 0
    for hi, (bid, bname, _, runs) in enumerate(BUILDS, start=1):
        hid = "HR-%d" % hi
        reqs.append("%s|high||%s" % (hid, HIGH[bid]))
        links.append("%s -> %s" % (hid, bid))
        tree["builds"].append({"id": bid, "name": bname,
                               "station": "../stations/station-a", "runs": runs})
        for ii, rid in enumerate(runs, start=1):
            rname, rtext = RUNS[rid]
            iid = "IR-%d.%d" % (hi, ii)
            reqs.append("%s|intermediate|%s|%s." % (iid, hid, rtext))
            links.append("%s -> %s" % (iid, rid))
            ids = []
            d = 0
            for title, details, steps in CASES[rid]:
                n += 1
                cid = "TC-%03d" % n
                ids.append(cid)
                covers = []
                for text in details:
                    d += 1
                    did = "DR-%d.%d.%d" % (hi, ii, d)
                    reqs.append("%s|detail|%s|%s" % (did, iid, text))
                    links.append("%s -> %s" % (did, cid))
                    covers.append(did)
                body = ['case %s "%s"' % (cid, title), "covers " + " ".join(covers)]
                body += steps
                with open(os.path.join(cases_dir, cid + ".tc"), "w") as f:
                    f.write("\n".join(body) + "\n")
            tree["runs"].append({"id": rid, "name": rname, "cases": ids})
            tree["cases"].extend(ids)
    with open(os.path.join(ROOT, "requirements.txt"), "w") as f:
        f.write("# id|level|parent|text\n" + "\n".join(reqs) + "\n")
    with open(os.path.join(ROOT, "links.txt"), "w") as f:
        f.write("# requirement -> build | test run | test case\n" + "\n".join(links) + "\n")
    with open(os.path.join(ROOT, "suite.json"), "w") as f:
        json.dump(tree, f, indent=2)
        f.write("\n")
    detail = sum(1 for r in reqs if "|detail|" in r)
    print("%d cases, %d requirements (%d detail)" % (n, len(reqs), detail), file=sys.stderr)


if __name__ == "__main__":
    main()
